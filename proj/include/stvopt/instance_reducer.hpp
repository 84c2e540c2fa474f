#pragma once

#include "stvopt/core_model.hpp"
#include "stvopt/structure_space.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace stvopt {

// Weight of ballots whose first choice is in `pool` that reach each pool member before any
// member of `excluded`. Keyed by pool member.
std::map<Cand, Rational> strict_support(const WeightedBallotSet& ballots, std::span<const Cand> pool,
                                        std::span<const Cand> excluded);

// Deletes `removed` from every ballot, keeping order. Emptied ballots stay as exhausted weight, so the
// total (and the quota) is unchanged. The result only lists the surviving candidates.
WeightedBallotSet reduce_ballots(const WeightedBallotSet& ballots, std::span<const Cand> removed);

// Carries the tie-break of `from` over to the surviving candidates of `to` (matched by id).
ElectionConfig restrict_config(const ElectionConfig& config, const WeightedBallotSet& from,
                               const WeightedBallotSet& to);

struct RemovedGroup {
    std::vector<std::string> ids;  // in ascending first-choice order
    // Smallest gap between a survivor's guaranteed tally and a group member's best case.
    Rational margin;
};

struct ReductionReport {
    std::vector<RemovedGroup> removed;
    WeightedBallotSet surviving_ballots;
    std::int64_t budget = 0;
    Quota quota;

    std::size_t removed_count() const;
    std::vector<std::string> removed_ids() const;
};

struct ReductionOptions {
    // Also try dropping the strongest member of a failing group and removing the rest.
    bool aggressive = false;
};

ReductionReport remove_irrelevant(const WeightedBallotSet& ballots, std::int64_t budget, const ElectionConfig& config,
                                  ReductionOptions options = {});

struct SequenceBounds {
    std::size_t max_wins = 0;            // quota wins possible in rounds 1..n-1
    std::size_t min_initial_losses = 0;  // rounds that must open with eliminations

    bool admits(const Sequence& s) const;
};

std::size_t predict_wins(const WeightedBallotSet& ballots, std::int64_t budget, const ElectionConfig& config);
std::size_t predict_losses(const WeightedBallotSet& ballots, std::int64_t budget, const ElectionConfig& config);
SequenceBounds sequence_bounds(const WeightedBallotSet& ballots, std::int64_t budget, const ElectionConfig& config);

}  // namespace stvopt
