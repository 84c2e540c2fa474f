#include "stvopt/strategy_allocator.hpp"

#include "stvopt/stv_engine.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

namespace stvopt {

namespace {

constexpr std::int64_t kUnlimited = std::numeric_limits<std::int64_t>::max();

std::int64_t to_i64(const Rational& integral) {
    const mpz_class& z = integral.get_num();
    if (z > mpz_class(std::numeric_limits<long>::max())) return kUnlimited;
    if (z < mpz_class(std::numeric_limits<long>::min())) return std::numeric_limits<std::int64_t>::min();
    return z.get_si();
}

struct Schedule {
    std::vector<Cand> resolved;  // by round (0-based)
    std::vector<Label> label;    // by round (0-based)
    std::vector<int> round_of;   // by candidate, 0-based round
};

Schedule make_schedule(const Structure& s) {
    Schedule sch;
    sch.resolved = s.resolution();
    sch.label = s.sequence.labels;
    sch.round_of.assign(sch.resolved.size(), 0);
    for (std::size_t r = 0; r < sch.resolved.size(); ++r) sch.round_of[idx(sch.resolved[r])] = static_cast<int>(r);
    return sch;
}

// Tallies per round when the rounds are forced to resolve as the schedule says.
struct ForcedRun {
    std::vector<std::vector<Rational>> tally;  // [round][candidate]
    std::vector<Rational> fraction;            // surplus fraction kept moving after each round
};

ForcedRun forced_run(std::span<const BallotEntry> ballots, std::size_t n, const Schedule& sch, const Rational& Q) {
    struct St {
        std::size_t pos = 0;
        Rational carried;
    };
    std::vector<St> st(ballots.size());
    std::vector<std::vector<std::size_t>> holders(n);
    std::vector<Rational> tally(n);
    std::vector<char> active(n, 1);
    auto place = [&](std::size_t b, std::size_t from) {
        const auto& r = ballots[b].ranking;
        for (std::size_t p = from; p < r.size(); ++p)
            if (active[idx(r[p])]) {
                st[b].pos = p;
                holders[idx(r[p])].push_back(b);
                tally[idx(r[p])] += st[b].carried;
                return;
            }
    };
    for (std::size_t b = 0; b < ballots.size(); ++b) {
        st[b].carried = ballots[b].weight;
        place(b, 0);
    }
    ForcedRun run;
    run.tally.reserve(n);
    run.fraction.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        run.tally.push_back(tally);
        const std::size_t s = idx(sch.resolved[r]);
        Rational fraction = 1;
        if (sch.label[r] == Label::W)
            fraction = (sgn(tally[s]) > 0 && tally[s] > Q) ? Rational((tally[s] - Q) / tally[s]) : Rational(0);
        run.fraction.push_back(fraction);
        active[s] = 0;
        tally[s] = 0;
        auto moving = std::move(holders[s]);
        holders[s].clear();
        for (std::size_t b : moving) {
            if (fraction != 1) st[b].carried *= fraction;
            place(b, st[b].pos + 1);
        }
    }
    return run;
}

std::vector<BallotEntry> entries_of(const WeightedBallotSet& ballots) {
    std::vector<BallotEntry> out;
    out.reserve(ballots.entries().size());
    for (const auto& [r, w] : ballots.entries()) out.push_back({std::span<const Cand>(r), w});
    return out;
}

// A contribution c must satisfy c > gap (strict) or c >= gap.
struct Need {
    Rational gap;
    bool strict = false;
};

std::int64_t units_for(const Need& need, const Rational& per_unit) {
    if (sgn(need.gap) < 0 || (sgn(need.gap) == 0 && !need.strict)) return 0;
    const Rational q = need.gap / per_unit;
    return need.strict ? to_i64(floor_of(q)) + 1 : to_i64(ceil_of(q));
}

class Rounds {
public:
    Rounds(const Schedule& sch, std::vector<int> ranks, Rational Q)
        : sch_(sch), ranks_(std::move(ranks)), Q_(std::move(Q)), n_(sch.resolved.size()) {}

    bool active_in(std::size_t c, std::size_t round) const { return static_cast<std::size_t>(sch_.round_of[c]) >= round; }

    bool beats(const Rational& ta, std::size_t a, const Rational& tb, std::size_t b) const {
        return ta > tb || (ta == tb && ranks_[a] < ranks_[b]);
    }

    // Contribution x still needs in round r, or nullopt when round r already holds for x.
    // Sets `dead` when the round can no longer hold whatever is added.
    std::optional<std::pair<std::size_t, std::vector<Need>>> first_gap(const ForcedRun& run, std::size_t r,
                                                                         bool& dead) const {
        const auto& t = run.tally[r];
        const std::size_t s = idx(sch_.resolved[r]);
        dead = false;
        if (sch_.label[r] == Label::L) {
            for (std::size_t c = 0; c < n_; ++c)
                if (active_in(c, r) && t[c] >= Q_) {
                    dead = true;
                    return std::nullopt;
                }
            for (std::size_t c : by_tie_) {
                if (c == s || !active_in(c, r) || beats(t[c], c, t[s], s)) continue;
                return std::make_pair(c, std::vector<Need>{{t[s] - t[c], ranks_[s] < ranks_[c]}});
            }
            return std::nullopt;
        }
        std::vector<Need> needs{{Q_ - t[s], false}};
        bool short_of = t[s] < Q_;
        for (std::size_t c = 0; c < n_; ++c) {
            if (c == s || !active_in(c, r)) continue;
            if (!beats(t[s], s, t[c], c)) short_of = true;
            needs.push_back({t[c] - t[s], ranks_[c] < ranks_[s]});
        }
        if (!short_of) return std::nullopt;
        return std::make_pair(s, std::move(needs));
    }

    // Ballots round r still needs whatever they are: added ballots only raise tallies, and no
    // tally in a round rises by more than one per ballot.
    std::int64_t deficit(const ForcedRun& run, std::size_t r) const {
        const auto& t = run.tally[r];
        const std::size_t s = idx(sch_.resolved[r]);
        std::int64_t worst = 0;
        auto need = [&](const Rational& gap, bool strict) {
            worst = std::max(worst, units_for(Need{gap, strict}, Rational(1)));
        };
        if (sch_.label[r] == Label::W) need(Q_ - t[s], false);
        for (std::size_t c = 0; c < n_; ++c) {
            if (c == s || !active_in(c, r)) continue;
            if (sch_.label[r] == Label::L) need(t[s] - t[c], ranks_[s] < ranks_[c]);
            else need(t[c] - t[s], ranks_[c] < ranks_[s]);
        }
        return worst;
    }

    bool holds(const ForcedRun& run, std::size_t r) const {
        bool dead = false;
        return !first_gap(run, r, dead) && !dead;
    }

    void set_tie_order() {
        by_tie_.resize(n_);
        for (std::size_t c = 0; c < n_; ++c) by_tie_[c] = c;
        std::sort(by_tie_.begin(), by_tie_.end(), [&](std::size_t a, std::size_t b) { return ranks_[a] < ranks_[b]; });
    }

    const Rational& quota() const { return Q_; }
    const std::vector<int>& ranks() const { return ranks_; }

private:
    const Schedule& sch_;
    std::vector<int> ranks_;
    Rational Q_;
    std::size_t n_;
    std::vector<std::size_t> by_tie_;
};

using Groups = std::map<Ranking, std::int64_t>;

// Longest chain of out-of-contest candidates placed before a beneficiary in a new ballot.
constexpr std::size_t kMaxRelay = 2;
constexpr std::size_t kNodeLimit = 20000;
// Single-ballot steps are only tried on deficits this small.
constexpr std::int64_t kStepDeficit = 6;

class Allocator {
public:
    Allocator(const WeightedBallotSet& ballots, const Structure& target, std::int64_t budget,
              const ElectionConfig& config)
        : ballots_(ballots),
          target_(target),
          config_(config),
          budget_(budget),
          n_(ballots.candidate_count()),
          sch_(make_schedule(target)),
          rounds_(sch_, config.tie_ranks(n_),
                  compute_quota(ballots.total_weight() + Rational(static_cast<long>(budget)), config).value),
          base_(entries_of(ballots)) {
        rounds_.set_tie_order();
    }

    AllocationResult run() {
        AllocationResult res;
        Groups start;
        const ForcedRun initial = evaluate(start);
        res.per_round_slacks = slacks_of(initial);
        search(start, 0);
        if (!best_) {
            res.reason = nodes_ > kNodeLimit ? "search limit reached without a plan" : "no allocation within the budget";
            return res;
        }
        for (const auto& [chain, count] : *best_) res.plan.add(chain, count);
        res.votes_used = best_cost_;
        res.plan.padding = budget_ - best_cost_;
        res.feasible = true;
        return res;
    }

private:
    std::vector<RoundSlack> slacks_of(const ForcedRun& run) const {
        std::vector<RoundSlack> out;
        for (std::size_t r = 0; r + 1 < n_; ++r) {
            bool dead = false;
            auto gap = rounds_.first_gap(run, r, dead);
            if (!gap) continue;
            Rational worst = 0;
            for (const auto& need : gap->second)
                if (need.gap > worst) worst = need.gap;
            out.push_back({static_cast<int>(r + 1), cand(gap->first), worst});
        }
        return out;
    }

    ForcedRun evaluate(const Groups& g) const {
        std::vector<BallotEntry> entries = base_;
        for (const auto& [chain, count] : g)
            entries.push_back({std::span<const Cand>(chain), Rational(static_cast<long>(count))});
        return forced_run(entries, n_, sch_, rounds_.quota());
    }

    std::size_t round_of(Cand c) const { return static_cast<std::size_t>(sch_.round_of[idx(c)]); }

    struct Move {
        Ranking from;  // existing group to extend; empty for new ballots
        Ranking chain; // resulting ballot
        std::int64_t units = 0;
        bool fresh = true;
    };

    bool earlier_hold(const ForcedRun& run, std::size_t r) const {
        for (std::size_t q = 0; q < r; ++q)
            if (!rounds_.holds(run, q)) return false;
        return true;
    }

    Groups apply(const Groups& g, const Move& m) const {
        Groups out = g;
        if (!m.fresh) {
            auto it = out.find(m.from);
            it->second -= m.units;
            if (it->second == 0) out.erase(it);
        }
        out[m.chain] += m.units;
        return out;
    }

    // Largest u in [0, hi] whose move keeps rounds before r intact.
    std::int64_t max_safe(const Groups& g, Move m, std::size_t r) const {
        std::int64_t lo = 0, hi = m.units;
        while (lo < hi) {
            const std::int64_t mid = lo + (hi - lo + 1) / 2;
            m.units = mid;
            if (earlier_hold(evaluate(apply(g, m)), r)) lo = mid;
            else hi = mid - 1;
        }
        return lo;
    }

    void relays(const std::vector<Cand>& out_of_contest, Ranking& cur, std::vector<Ranking>& acc) const {
        acc.push_back(cur);
        if (cur.size() >= kMaxRelay) return;
        for (Cand c : out_of_contest) {
            if (std::find(cur.begin(), cur.end(), c) != cur.end()) continue;
            cur.push_back(c);
            relays(out_of_contest, cur, acc);
            cur.pop_back();
        }
    }

    void search(const Groups& g, std::int64_t used) {
        if (++nodes_ > kNodeLimit) return;
        if (best_ && used >= best_cost_) return;
        if (!seen_.insert(g).second) return;
        const ForcedRun run = evaluate(g);
        std::size_t r = 0;
        std::optional<std::pair<std::size_t, std::vector<Need>>> gap;
        for (; r + 1 < n_; ++r) {
            bool dead = false;
            gap = rounds_.first_gap(run, r, dead);
            if (dead) return;
            if (gap) break;
        }
        if (!gap) {
            StrategyPlan plan;
            for (const auto& [chain, count] : g) plan.add(chain, count);
            plan.padding = budget_ - used;
            if (structure_of(replay_with_additions(ballots_, plan, config_)) != target_) return;
            best_ = g;
            best_cost_ = used;
            return;
        }
        const Cand x = cand(gap->first);
        // Released ballots can still be extended for free; anything else costs a fresh ballot.
        std::int64_t lower = 0;
        for (std::size_t q = r; q + 1 < n_; ++q) {
            std::int64_t free_units = 0;
            for (const auto& [chain, count] : g)
                if (std::all_of(chain.begin(), chain.end(), [&](Cand c) { return round_of(c) < q; }))
                    free_units += count;
            lower = std::max(lower, rounds_.deficit(run, q) - free_units);
        }
        if (lower > budget_ - used || (best_ && used + lower >= best_cost_)) return;
        // Round r holds for x once x clears every requirement on it.
        auto cleared = [&](const ForcedRun& after) {
            bool dead = false;
            auto next = rounds_.first_gap(after, r, dead);
            return dead || !next || next->first != idx(x);
        };
        // Fewest units of m that clear x, capped at m.units; the cap when nothing smaller does.
        auto fewest = [&](Move m) {
            const std::int64_t cap = m.units;
            std::int64_t hi = 1;
            while (hi < cap) {
                m.units = hi;
                if (cleared(evaluate(apply(g, m)))) break;
                hi = std::min(cap, hi * 2);
            }
            std::int64_t lo = hi / 2 + 1;
            if (hi == 1) lo = 1;
            while (lo < hi) {
                const std::int64_t mid = lo + (hi - lo) / 2;
                m.units = mid;
                if (cleared(evaluate(apply(g, m)))) hi = mid;
                else lo = mid + 1;
            }
            return hi;
        };

        std::vector<Move> safe, partial, steps, risky;
        auto consider = [&](Move m) {
            if (m.units <= 0) return;
            m.units = fewest(m);
            const std::int64_t ok = max_safe(g, m, r);
            if (ok >= m.units) safe.push_back(m);
            else risky.push_back(m);
            if (ok > 0 && ok < m.units) {
                Move p = m;
                p.units = ok;
                partial.push_back(p);
            }
            if (m.units > 1 && m.units <= kStepDeficit && ok >= 1) {
                Move one = m;
                one.units = 1;
                steps.push_back(one);
            }
        };

        // Released additions: every member already out of contest before round r.
        std::vector<std::pair<Ranking, std::int64_t>> released;
        for (const auto& [chain, count] : g) {
            if (std::all_of(chain.begin(), chain.end(), [&](Cand c) { return round_of(c) < r; }))
                released.emplace_back(chain, count);
        }
        std::sort(released.begin(), released.end(), [&](const auto& a, const auto& b) {
            const std::size_t ra = round_of(a.first.back()), rb = round_of(b.first.back());
            return ra != rb ? ra > rb : a.first < b.first;
        });
        for (const auto& [chain, count] : released) {
            Move m;
            m.from = chain;
            m.chain = chain;
            m.chain.push_back(x);
            m.fresh = false;
            m.units = count;
            consider(m);
        }

        std::vector<Cand> gone;  // out of contest before r, latest first
        for (std::size_t q = r; q-- > 0;) gone.push_back(sch_.resolved[q]);
        std::vector<Ranking> prefixes;
        Ranking cur;
        relays(gone, cur, prefixes);
        for (const auto& p : prefixes) {
            Move m;
            m.chain = p;
            m.chain.push_back(x);
            m.units = budget_ - used;
            consider(m);
        }

        // Feeding an earlier winner enlarges the surplus its own ballots pass on to x.
        for (Cand w : gone) {
            if (sch_.label[round_of(w)] != Label::W) continue;
            for (const auto& p : prefixes) {
                if (p.size() > 1 || std::find(p.begin(), p.end(), w) != p.end()) continue;
                Move m;
                m.chain = p;
                m.chain.push_back(w);
                m.units = budget_ - used;
                consider(m);
            }
        }

        for (auto* list : {&safe, &partial, &steps, &risky})
            for (const Move& m : *list) {
                const std::int64_t cost = m.fresh ? m.units : 0;
                if (used + cost > budget_) continue;
                search(apply(g, m), used + cost);
            }
    }

    const WeightedBallotSet& ballots_;
    Structure target_;
    ElectionConfig config_;
    std::int64_t budget_;
    std::size_t n_;
    Schedule sch_;
    Rounds rounds_;
    std::vector<BallotEntry> base_;
    std::set<Groups> seen_;
    std::optional<Groups> best_;
    std::int64_t best_cost_ = 0;
    std::size_t nodes_ = 0;
};

}  // namespace

AllocationResult smart_allocate(const WeightedBallotSet& ballots, const Structure& target, std::int64_t budget,
                                const ElectionConfig& config) {
    const std::size_t n = ballots.candidate_count();
    config.validate(n);
    if (budget < 0) throw DataError("budget must be non-negative");
    if (!target.well_formed(n)) throw DataError("target structure does not match the candidates");
    if (n == 1) {
        AllocationResult res;
        res.feasible = true;
        res.plan.padding = budget;
        return res;
    }
    return Allocator(ballots, target, budget, config).run();
}

std::optional<StrategyPlan> optimize_budget(const WeightedBallotSet& ballots, const Structure& target,
                                            std::int64_t max_budget, const ElectionConfig& config) {
    return optimize_budget(ballots, target, 0, max_budget, config);
}

std::optional<StrategyPlan> optimize_budget(const WeightedBallotSet& ballots, const Structure& target,
                                            std::int64_t min_budget, std::int64_t max_budget,
                                            const ElectionConfig& config) {
    if (max_budget < 0) throw DataError("maximum budget must be non-negative");
    if (min_budget < 0) throw DataError("minimum budget must be non-negative");
    const Rational total = ballots.total_weight();
    // Budgets sharing a quota give the same allocation; scan quota levels upward and stop at the
    // first affordable one, since every later level starts above its cost.
    std::int64_t B = min_budget;
    while (B <= max_budget) {
        const Rational q = compute_quota(total + Rational(static_cast<long>(B)), config).value;
        std::int64_t hi = B;
        if (config.quota_override) {
            hi = max_budget;
        } else {
            while (hi + 1 <= max_budget &&
                   compute_quota(total + Rational(static_cast<long>(hi + 1)), config).value == q)
                ++hi;
        }
        AllocationResult res = smart_allocate(ballots, target, hi, config);
        if (res.feasible) {
            const std::int64_t cost = std::max(res.votes_used, B);
            StrategyPlan plan = res.plan;
            plan.padding = cost - res.votes_used;
            // A smaller quota sometimes works with the same ballots; try trimming the padding.
            for (std::int64_t p = 0; p < plan.padding; ++p) {
                StrategyPlan trimmed = plan;
                trimmed.padding = p;
                if (structure_of(replay_with_additions(ballots, trimmed, config)) == target) return trimmed;
            }
            if (structure_of(replay_with_additions(ballots, plan, config)) == target) return plan;
        }
        B = hi + 1;
    }
    return std::nullopt;
}

std::vector<RoundSlack> unmet_slacks(const WeightedBallotSet& ballots, const Structure& target,
                                     const ElectionConfig& config) {
    const std::size_t n = ballots.candidate_count();
    std::vector<RoundSlack> out;
    if (n < 2) return out;
    const Schedule sch = make_schedule(target);
    Rounds rounds(sch, config.tie_ranks(n), compute_quota(ballots, config).value);
    rounds.set_tie_order();
    const auto entries = entries_of(ballots);
    const ForcedRun run = forced_run(entries, n, sch, rounds.quota());
    for (std::size_t r = 0; r + 1 < n; ++r) {
        const auto& t = run.tally[r];
        const std::size_t s = idx(sch.resolved[r]);
        for (std::size_t c = 0; c < n; ++c) {
            if (!rounds.active_in(c, r)) continue;
            if (sch.label[r] == Label::L) {
                if (t[c] >= rounds.quota()) out.push_back({static_cast<int>(r + 1), cand(c), t[c] - rounds.quota()});
                else if (c != s && !rounds.beats(t[c], c, t[s], s)) out.push_back({static_cast<int>(r + 1), cand(c), t[s] - t[c]});
            } else if (c == s) {
                if (t[s] < rounds.quota()) out.push_back({static_cast<int>(r + 1), cand(s), rounds.quota() - t[s]});
            } else if (!rounds.beats(t[s], s, t[c], c)) {
                out.push_back({static_cast<int>(r + 1), cand(s), t[c] - t[s]});
            }
        }
    }
    return out;
}

}  // namespace stvopt
