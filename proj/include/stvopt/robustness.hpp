#pragma once

#include "stvopt/core_model.hpp"
#include "stvopt/strategy_optimizer.hpp"
#include "stvopt/strategy_plan.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace stvopt {

// One poll respondent: a ranking and its survey weight.
struct Respondent {
    std::string id;
    Ranking ranking;
    Rational weight;
};

// Respondent-level data, kept separate so resampling draws people rather than ballot types.
class RespondentSet {
public:
    RespondentSet() = default;
    explicit RespondentSet(std::vector<Candidate> candidates) : shell_(std::move(candidates)) {}
    // Integer weights expand into that many unit respondents; other weights stay one record each.
    static RespondentSet from_ballots(const WeightedBallotSet& ballots);

    void add(Respondent r);
    const std::vector<Respondent>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    // Empty ballot set over the same candidates.
    const WeightedBallotSet& candidates() const noexcept { return shell_; }
    WeightedBallotSet ballots() const;

private:
    WeightedBallotSet shell_;
    std::vector<Respondent> records_;
};

// Seed of sample i: splitmix64 applied to master + (i + 1) * 0x9E3779B97F4A7C15.
std::uint64_t sample_seed(std::uint64_t master, std::uint64_t index);

// N draws with replacement (N = respondent count); each drawn record keeps its weight.
WeightedBallotSet bootstrap_sample(const RespondentSet& respondents, std::uint64_t seed);

struct GoalTemplate {
    GoalKind kind = GoalKind::TopK;
    std::size_t position = 2;
};

struct BootstrapConfig {
    int samples = 100;
    std::uint64_t seed = 0;
    std::int64_t budget = 0;
    GoalTemplate goal;
    unsigned threads = 0;  // 0: hardware concurrency
};

// Share of samples in which each candidate finished within the goal places.
struct EfficacyTable {
    std::vector<std::string> candidates;
    std::vector<double> frequency;  // by candidate index
    int samples = 0;
    std::size_t slots = 0;

    double of(std::string_view id) const;
};

struct CandidateStrategies {
    int needed = 0;      // samples where the candidate missed the goal without additions
    int feasible = 0;    // ... and a plan within the budget exists
    std::map<std::string, int> signatures;  // e.g. "DC" -> samples
    std::map<std::string, int> categories;  // e.g. "Selfish, AltruisticToLosers" -> samples
    double average_cost = 0;                // over feasible samples

    double percent(const std::string& signature) const;
};

struct StrategyDistribution {
    std::vector<std::string> candidates;
    std::vector<CandidateStrategies> by_candidate;
};

struct PerSampleReport {
    StrategyDistribution distribution;
    EfficacyTable baseline;              // without any additions
    std::vector<std::size_t> removed;    // candidates removed per sample at the budget
    std::vector<std::uint64_t> seeds;

    // Share of samples in which at least `count` candidates were removed.
    double reduction_rate(std::size_t count) const;
};

std::size_t goal_slots(const GoalTemplate& goal, const ElectionConfig& config);

EfficacyTable strategy_efficacy(const StrategyPlan& plan, const RespondentSet& base, const BootstrapConfig& bootstrap,
                                const ElectionConfig& config);

PerSampleReport per_sample_optimal(const RespondentSet& base, const BootstrapConfig& bootstrap,
                                   const ElectionConfig& config);

}  // namespace stvopt
