#pragma once

#include "stvopt/core_model.hpp"

#include <cstdint>
#include <map>

namespace stvopt {

// Ballots to add to an instance: integer counts per ranking, plus empty padding ballots that
// only enlarge the total (and therefore the quota).
struct StrategyPlan {
    std::map<Ranking, std::int64_t> additions;
    std::int64_t padding = 0;

    std::int64_t cost() const {
        std::int64_t c = padding;
        for (const auto& [r, n] : additions) c += n;
        return c;
    }
    std::int64_t votes_used() const { return cost() - padding; }
    std::size_t distinct_types() const { return additions.size() + (padding > 0 ? 1 : 0); }
    bool empty() const { return cost() == 0; }

    void add(const Ranking& r, std::int64_t n) {
        if (n <= 0) return;
        if (r.empty()) padding += n;
        else additions[r] += n;
    }

    friend bool operator==(const StrategyPlan&, const StrategyPlan&) = default;
};

WeightedBallotSet merge_plan(const WeightedBallotSet& ballots, const StrategyPlan& plan);

// Re-express a plan written against `from` in terms of the candidate indices of `to` (matched by id).
StrategyPlan remap_plan(const StrategyPlan& plan, const WeightedBallotSet& from, const WeightedBallotSet& to);

std::string format_plan(const StrategyPlan& plan, const WeightedBallotSet& ballots);

}  // namespace stvopt
