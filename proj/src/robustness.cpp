#include "stvopt/robustness.hpp"

#include "parallel.hpp"
#include "stvopt/instance_reducer.hpp"

#include <limits>
#include <optional>
#include <random>

namespace stvopt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Unbiased draw in [0, n) by rejection, so samples do not depend on the standard library's distributions.
std::uint64_t draw(std::mt19937_64& gen, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    for (;;) {
        const std::uint64_t x = gen();
        if (x < limit) return x % n;
    }
}

void check(const BootstrapConfig& b) {
    if (b.samples < 1) throw DataError("bootstrap needs at least one sample");
    if (b.budget < 0) throw DataError("budget must be non-negative");
    if (b.goal.kind == GoalKind::TopK && b.goal.position < 1) throw DataError("goal position must be at least 1");
}

EfficacyTable empty_table(const RespondentSet& base, int samples, std::size_t slots) {
    EfficacyTable t;
    for (const auto& c : base.candidates().candidates()) t.candidates.push_back(c.id);
    t.frequency.assign(t.candidates.size(), 0.0);
    t.samples = samples;
    t.slots = slots;
    return t;
}

void count_placements(EfficacyTable& t, const ElectionOutcome& out) {
    for (std::size_t p = 0; p < t.slots && p < out.order.size(); ++p) t.frequency[idx(out.order[p])] += 1;
}

void normalise(EfficacyTable& t) {
    for (double& f : t.frequency) f /= t.samples;
}

}  // namespace

RespondentSet RespondentSet::from_ballots(const WeightedBallotSet& ballots) {
    RespondentSet out(ballots.candidates());
    std::size_t next = 0;
    for (const auto& [r, w] : ballots.entries()) {
        if (w.get_den() == 1 && w.get_num().fits_slong_p()) {
            for (long i = 0; i < w.get_num().get_si(); ++i) out.add({"r" + std::to_string(++next), r, Rational(1)});
        } else {
            out.add({"r" + std::to_string(++next), r, w});
        }
    }
    return out;
}

void RespondentSet::add(Respondent r) {
    if (sgn(r.weight) < 0) throw DataError("respondent weight must be non-negative");
    WeightedBallotSet probe = shell_;
    probe.add(r.ranking, 1);  // validates the ranking
    r.weight.canonicalize();
    records_.push_back(std::move(r));
}

WeightedBallotSet RespondentSet::ballots() const {
    WeightedBallotSet out = shell_;
    for (const auto& r : records_) out.add(r.ranking, r.weight);
    return out;
}

std::uint64_t sample_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ull);
}

WeightedBallotSet bootstrap_sample(const RespondentSet& respondents, std::uint64_t seed) {
    WeightedBallotSet out = respondents.candidates();
    const std::size_t n = respondents.size();
    if (n == 0) return out;
    std::mt19937_64 gen(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const Respondent& r = respondents.records()[draw(gen, n)];
        out.add(r.ranking, r.weight);
    }
    return out;
}

std::size_t goal_slots(const GoalTemplate& goal, const ElectionConfig& config) {
    return goal.kind == GoalKind::Win ? static_cast<std::size_t>(config.seats) : goal.position;
}

double EfficacyTable::of(std::string_view id) const {
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i] == id) return frequency[i];
    throw DataError("unknown candidate '" + std::string(id) + "'");
}

double CandidateStrategies::percent(const std::string& signature) const {
    auto it = signatures.find(signature);
    return it == signatures.end() || feasible == 0 ? 0.0 : 100.0 * it->second / feasible;
}

double PerSampleReport::reduction_rate(std::size_t count) const {
    if (removed.empty()) return 0;
    std::size_t hits = 0;
    for (std::size_t r : removed) hits += r >= count;
    return static_cast<double>(hits) / static_cast<double>(removed.size());
}

EfficacyTable strategy_efficacy(const StrategyPlan& plan, const RespondentSet& base, const BootstrapConfig& bootstrap,
                                const ElectionConfig& config) {
    check(bootstrap);
    const std::size_t slots = goal_slots(bootstrap.goal, config);
    std::vector<ElectionOutcome> outcomes(static_cast<std::size_t>(bootstrap.samples));
    detail::parallel_for(outcomes.size(), bootstrap.threads, [&](std::size_t i) {
        outcomes[i] = replay_with_additions(bootstrap_sample(base, sample_seed(bootstrap.seed, i)), plan, config);
    });
    EfficacyTable t = empty_table(base, bootstrap.samples, slots);
    for (const auto& out : outcomes) count_placements(t, out);
    normalise(t);
    return t;
}

PerSampleReport per_sample_optimal(const RespondentSet& base, const BootstrapConfig& bootstrap,
                                   const ElectionConfig& config) {
    check(bootstrap);
    const std::size_t n = base.candidates().candidate_count();
    const std::size_t slots = goal_slots(bootstrap.goal, config);

    struct Outcome {
        std::uint64_t seed = 0;
        ElectionOutcome plain;
        std::size_t removed = 0;
        // per candidate, only what the tables use
        struct Attempt {
            bool needed = false;
            bool feasible = false;
            std::int64_t cost = 0;
            std::string categories, signature;
        };
        std::vector<Attempt> strategy;
    };
    std::vector<Outcome> results(static_cast<std::size_t>(bootstrap.samples));
    detail::parallel_for(results.size(), bootstrap.threads, [&](std::size_t i) {
        Outcome& o = results[i];
        o.seed = sample_seed(bootstrap.seed, i);
        const WeightedBallotSet sample = bootstrap_sample(base, o.seed);
        o.plain = run_election(sample, config);
        o.removed = remove_irrelevant(sample, bootstrap.budget, config).removed_count();
        o.strategy.resize(n);
        for (std::size_t c = 0; c < n; ++c) {
            if (o.plain.position_of(cand(c)) < slots) continue;
            Goal g{cand(c), bootstrap.goal.kind, bootstrap.goal.position, bootstrap.budget};
            auto& a = o.strategy[c];
            a.needed = true;
            try {
                // samples already run in parallel
                const ClassifiedStrategy s = optimal_strategy(sample, g, config, OptimizerOptions{true, 1});
                a.feasible = true;
                a.cost = s.cost;
                a.categories = s.categories.str();
                a.signature = strategy_signature(s.plan, sample);
            } catch (const Infeasible&) {
            }
        }
    });

    PerSampleReport report;
    report.baseline = empty_table(base, bootstrap.samples, slots);
    report.distribution.candidates = report.baseline.candidates;
    report.distribution.by_candidate.resize(n);
    std::vector<double> cost_sum(n, 0.0);
    for (const Outcome& o : results) {
        count_placements(report.baseline, o.plain);
        report.removed.push_back(o.removed);
        report.seeds.push_back(o.seed);
        for (std::size_t c = 0; c < n; ++c) {
            const auto& a = o.strategy[c];
            if (!a.needed) continue;
            CandidateStrategies& cs = report.distribution.by_candidate[c];
            ++cs.needed;
            if (!a.feasible) continue;
            ++cs.feasible;
            ++cs.signatures[a.signature];
            ++cs.categories[a.categories];
            cost_sum[c] += static_cast<double>(a.cost);
        }
    }
    for (std::size_t c = 0; c < n; ++c) {
        auto& cs = report.distribution.by_candidate[c];
        if (cs.feasible) cs.average_cost = cost_sum[c] / cs.feasible;
    }
    normalise(report.baseline);
    return report;
}

}  // namespace stvopt
