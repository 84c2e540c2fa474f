#pragma once

#include "stvopt/core_model.hpp"
#include "stvopt/strategy_plan.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stvopt {

enum class Label : char { W = 'W', L = 'L' };

enum class RoundKind { QuotaWin, Elimination, FinalPlacement };

std::string_view to_string(RoundKind k);

struct RoundOutcome {
    int round_index = 0;  // 1-based
    Cand resolved{};
    RoundKind kind = RoundKind::Elimination;
    // Active candidates and their tallies at the start of the round, ordered by candidate index.
    std::vector<std::pair<Cand, Rational>> tallies_before;
    std::optional<Rational> surplus_fraction;
    // tally - quota for wins; second-lowest - lowest for eliminations; zero for the final placement.
    Rational margin;
    Rational exhausted_before;  // weight of ballots with no active candidate left
    Rational retired_before;    // weight kept by earlier quota winners

    Rational tally_of(Cand c) const;
    bool was_active(Cand c) const;
};

struct ElectionOutcome {
    std::vector<Cand> order;
    std::vector<Label> sequence;
    std::vector<RoundOutcome> rounds;
    std::vector<Cand> winners;
    Quota quota;

    std::size_t position_of(Cand c) const;
    std::size_t quota_wins() const;
};

// One ballot record for the low-level tabulator.
struct BallotEntry {
    std::span<const Cand> ranking;
    Rational weight;
};

// Tabulates with an explicit quota. Used by run_election and by callers that assemble
// ballots without building a WeightedBallotSet.
ElectionOutcome tabulate(std::span<const BallotEntry> ballots, std::size_t candidate_count,
                         const ElectionConfig& config, const Quota& quota);

ElectionOutcome run_election(const WeightedBallotSet& ballots, const ElectionConfig& config);

// share * (tally - quota) / tally.
Rational transfer_surplus(const Rational& tally, const Quota& quota, const Rational& share);

ElectionOutcome replay_with_additions(const WeightedBallotSet& ballots, const StrategyPlan& plan,
                                      const ElectionConfig& config);

std::string format_sequence(std::span<const Label> seq);
std::string format_order(std::span<const Cand> order, const WeightedBallotSet& ballots);

}  // namespace stvopt
