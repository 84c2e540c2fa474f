#pragma once

#include "stvopt/core_model.hpp"
#include "stvopt/strategy_plan.hpp"
#include "stvopt/structure_space.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stvopt {

// Votes a candidate was short of in one round of the target structure.
struct RoundSlack {
    int round = 0;
    Cand candidate{};
    Rational needed;
};

struct AllocationResult {
    bool feasible = false;
    StrategyPlan plan;  // includes budget - votes_used padding ballots, so the quota matches the budget
    std::int64_t votes_used = 0;
    std::vector<RoundSlack> per_round_slacks;
    std::string reason;  // why allocation failed, empty when feasible
};

// Fills the round slacks of `target` in order, with the quota fixed by total + budget.
AllocationResult smart_allocate(const WeightedBallotSet& ballots, const Structure& target, std::int64_t budget,
                                const ElectionConfig& config);

// Cheapest plan over budgets 0..max_budget, or nullopt when none reaches the target.
std::optional<StrategyPlan> optimize_budget(const WeightedBallotSet& ballots, const Structure& target,
                                            std::int64_t max_budget, const ElectionConfig& config);
// Same, when budgets below min_budget are already known to fall short.
std::optional<StrategyPlan> optimize_budget(const WeightedBallotSet& ballots, const Structure& target,
                                            std::int64_t min_budget, std::int64_t max_budget,
                                            const ElectionConfig& config);

// Slacks left unmet when `ballots` is tabulated along the rounds of `target` at its own quota.
std::vector<RoundSlack> unmet_slacks(const WeightedBallotSet& ballots, const Structure& target,
                                     const ElectionConfig& config);

}  // namespace stvopt
