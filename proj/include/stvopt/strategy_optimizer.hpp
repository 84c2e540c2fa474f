#pragma once

#include "stvopt/core_model.hpp"
#include "stvopt/strategy_plan.hpp"
#include "stvopt/structure_space.hpp"
#include "stvopt/stv_engine.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace stvopt {

enum class GoalKind { Win, TopK };

struct Goal {
    Cand subject{};
    GoalKind kind = GoalKind::TopK;
    std::size_t position = 1;  // TopK only: subject must finish within the first `position` places
    std::int64_t max_budget = 0;

    static Goal win(Cand subject, std::int64_t max_budget) { return {subject, GoalKind::Win, 0, max_budget}; }
    static Goal top(Cand subject, std::size_t position, std::int64_t max_budget) {
        return {subject, GoalKind::TopK, position, max_budget};
    }
};

// Places the goal asks for: k for Win, the position for TopK.
std::size_t goal_slots(const Goal& goal, const ElectionConfig& config);
bool goal_met(const ElectionOutcome& outcome, const Goal& goal, const ElectionConfig& config);

enum class Category : unsigned { Selfish = 1, AltruisticToLosers = 2, AltruisticToWinners = 4 };

class CategorySet {
public:
    constexpr CategorySet() = default;
    constexpr bool has(Category c) const { return bits_ & static_cast<unsigned>(c); }
    constexpr void insert(Category c) { bits_ |= static_cast<unsigned>(c); }
    constexpr bool empty() const { return bits_ == 0; }
    std::string str() const;  // e.g. "Selfish, AltruisticToLosers"

    friend constexpr bool operator==(CategorySet, CategorySet) = default;

private:
    unsigned bits_ = 0;
};

std::string_view to_string(Category c);

struct ClassifiedStrategy {
    StrategyPlan plan;
    std::int64_t cost = 0;
    CategorySet categories;
    Structure target_structure;
    ElectionOutcome realized;
};

// No plan within the budget reaches the goal.
class Infeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class WinRoute {
    Any,        // cheapest plan of any ballots that makes the subject a winner
    SelfVotes,  // cheapest run of first-place ballots for the subject
};

struct OptimizerOptions {
    bool reduce = true;    // shrink the instance with remove_irrelevant first
    unsigned threads = 0;  // 0: hardware concurrency
};

ClassifiedStrategy optimal_win_strategy(const WeightedBallotSet& ballots, Cand subject, const ElectionConfig& config,
                                        std::int64_t max_budget, WinRoute route = WinRoute::Any,
                                        OptimizerOptions options = {});

ClassifiedStrategy optimal_topk_strategy(const WeightedBallotSet& ballots, const Goal& goal,
                                         const ElectionConfig& config, OptimizerOptions options = {});

// Either entry point, picked by goal.kind.
ClassifiedStrategy optimal_strategy(const WeightedBallotSet& ballots, const Goal& goal, const ElectionConfig& config,
                                    OptimizerOptions options = {});

// First-place ballots the subject needs to overtake the current winner in their final head-to-head,
// in a one-seat race where the leader's first choices beat every rival's support against it.
// nullopt when that does not hold.
std::optional<std::int64_t> head_to_head_votes(const WeightedBallotSet& ballots, Cand subject,
                                               const ElectionConfig& config);

CategorySet classify_strategy(const StrategyPlan& plan, const ElectionOutcome& realized, Cand subject);

// Ballot is [L,...,L,W] or [L,...,L] with respect to the winners of `realized`.
bool loser_chain_form(const Ranking& ballot, const ElectionOutcome& realized);

struct CaseAWitness {
    Cand candidate{};
    int rounds_survived = 0;  // rounds between the elimination it escaped and its win
    int winning_round = 0;    // 1-based
};

struct CaseAFlag {
    bool detected = false;
    std::optional<CaseAWitness> witness;
};

// A candidate receiving added ballots escapes the round it was eliminated in without them, then
// reaches quota on transfers alone: no added weight arrives after the first round.
CaseAFlag detect_case_a(const WeightedBallotSet& ballots, const StrategyPlan& plan, const ElectionOutcome& realized,
                        const ElectionConfig& config);

// Ids of the first-ranked candidate of each added ballot, most votes first, e.g. "DC".
std::string strategy_signature(const StrategyPlan& plan, const WeightedBallotSet& ballots);

}  // namespace stvopt
