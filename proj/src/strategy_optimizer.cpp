#include "stvopt/strategy_optimizer.hpp"

#include "parallel.hpp"
#include "stvopt/instance_reducer.hpp"
#include "stvopt/strategy_allocator.hpp"

#include <algorithm>
#include <set>

namespace stvopt {

namespace {

// Structures evaluated between cost-cap updates. Fixed, so results do not depend on thread count.
constexpr std::size_t kBatch = 16;
constexpr std::size_t kMaxStructures = 5'000'000;
constexpr std::int64_t kFirstTier = 8;

std::int64_t to_i64(const Rational& q) {
    const mpz_class f = ceil_of(q).get_num();
    if (!f.fits_slong_p()) throw DataError("vote count out of range");
    return f.get_si();
}

void check_subject(const WeightedBallotSet& ballots, Cand subject) {
    if (idx(subject) >= ballots.candidate_count()) throw DataError("subject is not a candidate");
}

std::vector<std::vector<Cand>> orders_with_subject(std::size_t n, Cand subject, std::size_t slots,
                                                   const std::vector<int>& ranks) {
    std::vector<Cand> others;
    for (std::size_t c = 0; c < n; ++c)
        if (cand(c) != subject) others.push_back(cand(c));
    auto by_rank = [&](Cand a, Cand b) { return ranks[idx(a)] < ranks[idx(b)]; };
    std::vector<std::vector<Cand>> out;
    for (std::size_t pos = 0; pos < std::min(slots, n); ++pos) {
        std::sort(others.begin(), others.end(), by_rank);
        do {
            std::vector<Cand> order = others;
            order.insert(order.begin() + static_cast<std::ptrdiff_t>(pos), subject);
            out.push_back(std::move(order));
            if (out.size() > kMaxStructures) throw DataError("too many orders to search; reduce the instance");
        } while (std::next_permutation(others.begin(), others.end(), by_rank));
    }
    return out;
}

struct Found {
    StrategyPlan plan;
    Structure structure;
    std::size_t index = 0;
};

bool preferred(const StrategyPlan& a, std::size_t ia, const Found& b) {
    if (a.cost() != b.plan.cost()) return a.cost() < b.plan.cost();
    if (a.distinct_types() != b.plan.distinct_types()) return a.distinct_types() < b.plan.distinct_types();
    return ia < b.index;
}

std::optional<Found> search_structures(const WeightedBallotSet& ballots, const ElectionConfig& config, Cand subject,
                                       std::size_t slots, std::int64_t cap, unsigned threads) {
    const std::size_t n = ballots.candidate_count();
    const auto orders = orders_with_subject(n, subject, slots, config.tie_ranks(n));
    const SequenceBounds bounds = sequence_bounds(ballots, cap, config);
    std::vector<Sequence> sequences;
    for (auto& s : enumerate_feasible_sequences(n, static_cast<std::size_t>(config.seats)))
        if (bounds.admits(s)) sequences.push_back(std::move(s));
    if (orders.size() * sequences.size() > kMaxStructures)
        throw DataError("too many structures to search; reduce the instance");

    std::vector<Structure> structures;
    structures.reserve(orders.size() * sequences.size());
    for (const auto& o : orders)
        for (const auto& s : sequences) structures.push_back(Structure{o, s});

    // Deepen the cap in small tiers, so no structure is searched far beyond the cheapest one.
    // Budgets below a finished tier are never revisited.
    std::optional<Found> best;
    std::int64_t checked = -1;  // every budget up to here is known to fall short
    for (std::int64_t tier = std::min<std::int64_t>(cap, kFirstTier);; tier = std::min(cap, tier + std::max<std::int64_t>(2, tier / 8))) {
        std::int64_t limit = tier;
        for (std::size_t start = 0; start < structures.size(); start += kBatch) {
            const std::size_t len = std::min(kBatch, structures.size() - start);
            std::vector<std::optional<StrategyPlan>> results(len);
            detail::parallel_for(len, threads, [&](std::size_t i) {
                results[i] = optimize_budget(ballots, structures[start + i], checked + 1, limit, config);
            });
            for (std::size_t i = 0; i < len; ++i) {
                if (!results[i]) continue;
                if (!best || preferred(*results[i], start + i, *best))
                    best = Found{std::move(*results[i]), structures[start + i], start + i};
            }
            if (best) limit = std::min(limit, best->plan.cost());
        }
        if (best || tier >= cap) break;
        checked = tier;
    }
    return best;
}

ClassifiedStrategy finish(const WeightedBallotSet& ballots, StrategyPlan plan, Cand subject,
                          const ElectionConfig& config) {
    ClassifiedStrategy out;
    out.realized = replay_with_additions(ballots, plan, config);
    out.cost = plan.cost();
    out.categories = classify_strategy(plan, out.realized, subject);
    out.target_structure = structure_of(out.realized);
    out.plan = std::move(plan);
    return out;
}

StrategyPlan self_votes(Cand subject, std::int64_t t) {
    StrategyPlan p;
    p.add(Ranking{subject}, t);
    return p;
}

// Cheapest number of [subject] ballots that wins a seat. Adding them never hurts the subject, so
// winning is monotone in the count and bisection finds the least one.
std::optional<std::int64_t> cheapest_self_votes(const WeightedBallotSet& ballots, Cand subject,
                                                const ElectionConfig& config, std::int64_t max_budget) {
    const Goal goal = Goal::win(subject, max_budget);
    auto wins = [&](std::int64_t t) {
        return goal_met(replay_with_additions(ballots, self_votes(subject, t), config), goal, config);
    };
    if (wins(0)) return 0;
    if (auto h = head_to_head_votes(ballots, subject, config))
        if (*h <= max_budget && *h > 0 && wins(*h) && !wins(*h - 1)) return *h;
    if (!wins(max_budget)) return std::nullopt;
    std::int64_t lo = 0, hi = max_budget;  // lo loses, hi wins
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        (wins(mid) ? hi : lo) = mid;
    }
    return hi;
}

enum class Attempt { Found, None, Rejected };

// Structure search, optionally on the reduced instance. Rejected means the reduced plan did not
// carry over to the full instance.
Attempt topk_attempt(const WeightedBallotSet& ballots, const Goal& goal, const ElectionConfig& config,
                     bool reduce, unsigned threads, StrategyPlan& out) {
    const std::size_t slots = goal_slots(goal, config);
    WeightedBallotSet work = ballots;
    ElectionConfig wcfg = config;
    Cand subject = goal.subject;
    if (reduce) {
        // Removal steps are sound one at a time, so stop before the step that takes the subject.
        const ReductionReport rep = remove_irrelevant(ballots, goal.max_budget, config);
        const std::string& id = ballots.candidate(goal.subject).id;
        std::vector<Cand> removed;
        std::size_t left = ballots.candidate_count();
        bool subject_gone = false;
        for (const auto& group : rep.removed) {
            if (std::find(group.ids.begin(), group.ids.end(), id) != group.ids.end()) {
                subject_gone = true;
                break;
            }
            for (const auto& g : group.ids) removed.push_back(ballots.at(g));
            left -= group.ids.size();
        }
        // The subject then finishes below everyone left after its step.
        if (subject_gone) {
            std::size_t group_size = 0;
            for (const auto& group : rep.removed)
                if (std::find(group.ids.begin(), group.ids.end(), id) != group.ids.end()) group_size = group.ids.size();
            if (slots <= left - group_size) return Attempt::None;
        }
        if (removed.empty()) {
            reduce = false;
        } else {
            work = reduce_ballots(ballots, removed);
            wcfg = restrict_config(config, ballots, work);
            subject = work.at(id);
        }
    }
    auto found = search_structures(work, wcfg, subject, slots, goal.max_budget, threads);
    if (!found) return Attempt::None;
    out = reduce ? remap_plan(found->plan, work, ballots) : std::move(found->plan);
    if (!goal_met(replay_with_additions(ballots, out, config), goal, config)) return Attempt::Rejected;
    return Attempt::Found;
}

std::optional<StrategyPlan> topk_plan(const WeightedBallotSet& ballots, const Goal& goal,
                                      const ElectionConfig& config, const OptimizerOptions& options) {
    StrategyPlan plan;
    if (goal_met(run_election(ballots, config), goal, config)) return plan;
    Attempt a = topk_attempt(ballots, goal, config, options.reduce, options.threads, plan);
    if (a == Attempt::Rejected) a = topk_attempt(ballots, goal, config, false, options.threads, plan);
    if (a != Attempt::Found) return std::nullopt;
    return plan;
}

}  // namespace

std::size_t goal_slots(const Goal& goal, const ElectionConfig& config) {
    return goal.kind == GoalKind::Win ? static_cast<std::size_t>(config.seats) : goal.position;
}

bool goal_met(const ElectionOutcome& outcome, const Goal& goal, const ElectionConfig& config) {
    return outcome.position_of(goal.subject) < goal_slots(goal, config);
}

std::string_view to_string(Category c) {
    switch (c) {
        case Category::Selfish: return "Selfish";
        case Category::AltruisticToLosers: return "AltruisticToLosers";
        case Category::AltruisticToWinners: return "AltruisticToWinners";
    }
    return "?";
}

std::string CategorySet::str() const {
    std::string s;
    for (Category c : {Category::Selfish, Category::AltruisticToLosers, Category::AltruisticToWinners}) {
        if (!has(c)) continue;
        if (!s.empty()) s += ", ";
        s += to_string(c);
    }
    return s;
}

std::optional<std::int64_t> head_to_head_votes(const WeightedBallotSet& ballots, Cand subject,
                                               const ElectionConfig& config) {
    check_subject(ballots, subject);
    const std::size_t n = ballots.candidate_count();
    if (config.seats != 1 || n < 2) return std::nullopt;
    const Cand leader = run_election(ballots, config).winners.front();
    if (leader == subject) return 0;
    std::vector<Cand> not_leader, not_subject;
    for (std::size_t c = 0; c < n; ++c) {
        if (cand(c) != leader) not_leader.push_back(cand(c));
        if (cand(c) != subject) not_subject.push_back(cand(c));
    }
    const Cand lone_leader[] = {leader};
    const Cand lone_subject[] = {subject};
    const auto against_leader = strict_support(ballots, not_leader, lone_leader);
    const Rational leader_first = aggregate_count(ballots, lone_leader);
    for (const auto& [c, s] : against_leader)
        if (!(leader_first > s)) return std::nullopt;
    const Rational leader_final = strict_support(ballots, not_subject, lone_subject).at(leader);
    const Rational gap = leader_final - against_leader.at(subject);
    const auto ranks = config.tie_ranks(n);
    const bool subject_favoured = ranks[idx(subject)] < ranks[idx(leader)];
    Rational need = ceil_of(gap);
    if (need == gap && !subject_favoured) need += 1;
    return std::max<std::int64_t>(0, to_i64(need));
}

ClassifiedStrategy optimal_topk_strategy(const WeightedBallotSet& ballots, const Goal& goal,
                                         const ElectionConfig& config, OptimizerOptions options) {
    check_subject(ballots, goal.subject);
    if (goal.kind != GoalKind::TopK) throw DataError("top-k search needs a TopK goal");
    if (goal.position < 1 || goal.position > ballots.candidate_count())
        throw DataError("goal position must be between 1 and the number of candidates");
    if (goal.max_budget < 0) throw DataError("maximum budget must be non-negative");
    config.validate(ballots.candidate_count());
    auto plan = topk_plan(ballots, goal, config, options);
    if (!plan) throw Infeasible("no plan within budget " + std::to_string(goal.max_budget) + " places " +
                                ballots.candidate(goal.subject).id + " in the top " + std::to_string(goal.position));
    return finish(ballots, std::move(*plan), goal.subject, config);
}

ClassifiedStrategy optimal_win_strategy(const WeightedBallotSet& ballots, Cand subject, const ElectionConfig& config,
                                        std::int64_t max_budget, WinRoute route, OptimizerOptions options) {
    check_subject(ballots, subject);
    if (max_budget < 0) throw DataError("maximum budget must be non-negative");
    config.validate(ballots.candidate_count());
    const auto self = cheapest_self_votes(ballots, subject, config, max_budget);
    if (route == WinRoute::SelfVotes) {
        if (!self) throw Infeasible("no run of first-place ballots within budget " + std::to_string(max_budget) +
                                    " makes " + ballots.candidate(subject).id + " a winner");
        return finish(ballots, self_votes(subject, *self), subject, config);
    }
    // The self-vote cost caps the full search.
    Goal g = Goal::top(subject, static_cast<std::size_t>(config.seats), self ? *self : max_budget);
    g.position = std::min(g.position, ballots.candidate_count());
    if (auto plan = topk_plan(ballots, g, config, options)) return finish(ballots, std::move(*plan), subject, config);
    if (self) return finish(ballots, self_votes(subject, *self), subject, config);
    throw Infeasible("no plan within budget " + std::to_string(max_budget) + " makes " +
                     ballots.candidate(subject).id + " a winner");
}

ClassifiedStrategy optimal_strategy(const WeightedBallotSet& ballots, const Goal& goal, const ElectionConfig& config,
                                    OptimizerOptions options) {
    if (goal.kind == GoalKind::Win)
        return optimal_win_strategy(ballots, goal.subject, config, goal.max_budget, WinRoute::Any, options);
    return optimal_topk_strategy(ballots, goal, config, options);
}

CategorySet classify_strategy(const StrategyPlan& plan, const ElectionOutcome& realized, Cand subject) {
    const std::set<Cand> winners(realized.winners.begin(), realized.winners.end());
    CategorySet out;
    for (const auto& [r, count] : plan.additions) {
        if (count <= 0 || r.empty()) continue;
        if (std::find(r.begin(), r.end(), subject) != r.end()) out.insert(Category::Selfish);
        for (Cand c : r) {
            if (winners.count(c)) break;
            if (c != subject) {
                out.insert(Category::AltruisticToLosers);
                break;
            }
        }
        for (std::size_t i = 0; i + 1 < r.size(); ++i)
            if (r[i] != subject && winners.count(r[i])) out.insert(Category::AltruisticToWinners);
    }
    return out;
}

bool loser_chain_form(const Ranking& ballot, const ElectionOutcome& realized) {
    const std::set<Cand> winners(realized.winners.begin(), realized.winners.end());
    for (std::size_t i = 0; i + 1 < ballot.size(); ++i)
        if (winners.count(ballot[i])) return false;
    return true;
}

CaseAFlag detect_case_a(const WeightedBallotSet& ballots, const StrategyPlan& plan, const ElectionOutcome& realized,
                        const ElectionConfig& config) {
    CaseAFlag flag;
    if (realized.quota_wins() == 0) return flag;
    const std::size_t n = ballots.candidate_count();
    const ElectionOutcome base = run_election(ballots, config);
    std::vector<int> resolved_round(n, 0);  // realized, 1-based
    for (const auto& r : realized.rounds) resolved_round[idx(r.resolved)] = r.round_index;
    // Added ballots sitting with `x` at the start of `round`.
    auto holders = [&](Cand x, int round) {
        std::vector<const Ranking*> out;
        for (const auto& [r, count] : plan.additions) {
            for (Cand c : r) {
                if (resolved_round[idx(c)] < round) continue;
                if (c == x) out.push_back(&r);
                break;
            }
        }
        return out;
    };
    for (const auto& rb : base.rounds) {
        if (rb.kind != RoundKind::Elimination) continue;
        const Cand x = rb.resolved;
        bool benefits = false;
        for (const auto& [r, count] : plan.additions)
            benefits = benefits || std::find(r.begin(), r.end(), x) != r.end();
        if (!benefits) continue;
        const RoundOutcome& win = realized.rounds.at(static_cast<std::size_t>(resolved_round[idx(x)] - 1));
        if (win.kind != RoundKind::QuotaWin || win.round_index <= rb.round_index) continue;
        const RoundOutcome& first = realized.rounds.front();
        if (first.tally_of(x) >= realized.quota.value) continue;
        if (!(win.tally_of(x) > first.tally_of(x))) continue;
        if (holders(x, win.round_index) != holders(x, 1)) continue;
        flag.detected = true;
        flag.witness = CaseAWitness{x, win.round_index - rb.round_index, win.round_index};
        return flag;
    }
    return flag;
}

std::string strategy_signature(const StrategyPlan& plan, const WeightedBallotSet& ballots) {
    std::map<Cand, std::int64_t> by_first;
    for (const auto& [r, count] : plan.additions)
        if (!r.empty()) by_first[r.front()] += count;
    std::vector<std::pair<Cand, std::int64_t>> items(by_first.begin(), by_first.end());
    std::stable_sort(items.begin(), items.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return ballots.candidate(a.first).id < ballots.candidate(b.first).id;
    });
    bool short_ids = true;
    for (const auto& [c, v] : items) short_ids = short_ids && ballots.candidate(c).id.size() == 1;
    std::string s;
    for (const auto& [c, v] : items) {
        if (!s.empty() && !short_ids) s += "+";
        s += ballots.candidate(c).id;
    }
    return s;
}

}  // namespace stvopt
