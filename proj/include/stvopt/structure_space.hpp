#pragma once

#include "stvopt/core_model.hpp"
#include "stvopt/stv_engine.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace stvopt {

struct Sequence {
    std::vector<Label> labels;

    std::size_t size() const noexcept { return labels.size(); }
    // Quota wins implied by the sequence; the last label is conventional and not counted.
    std::size_t wins_before_last() const;
    std::string str() const { return format_sequence(labels); }
    static Sequence parse(std::string_view text);

    friend auto operator<=>(const Sequence&, const Sequence&) = default;
    friend bool operator==(const Sequence&, const Sequence&) = default;
};

struct Structure {
    std::vector<Cand> order;
    Sequence sequence;

    // Candidate resolved in each round: a W takes the topmost open slot of the order, an L the bottommost.
    std::vector<Cand> resolution() const;
    bool well_formed(std::size_t n) const;

    friend auto operator<=>(const Structure&, const Structure&) = default;
    friend bool operator==(const Structure&, const Structure&) = default;
};

Structure structure_of(const ElectionOutcome& outcome);

std::vector<Sequence> enumerate_all_sequences(std::size_t n);
std::vector<Sequence> enumerate_feasible_sequences(std::size_t n, std::size_t k);
// Sum over j = 1..k of C(n, j).
std::uint64_t feasible_sequence_bound(std::size_t n, std::size_t k);

// ---- symbolic constraints ----

// One aggregated-count variable V^{|prefix|}_{prefix}, damped by the surplus factor
// (1 - Q / T_w) of every quota winner w that held the ballot along the way.
struct PathTerm {
    Ranking prefix;
    std::vector<Cand> damped_by;
};

// Symbolic tally of `candidate` at the start of `round`.
struct TallyExpr {
    Cand candidate{};
    int round = 0;
    std::vector<PathTerm> terms;
};

enum class Relation {
    BelowQuota,   // Q > T_a
    ReachesQuota, // T_a >= Q
    Outranks,     // T_a > T_b, equal tallies resolved by the tie-break order
};

struct Inequality {
    Relation relation = Relation::Outranks;
    Cand a{};
    Cand b{};
};

struct ConstraintGroup {
    int round = 0;
    Cand resolved{};
    Label label = Label::L;
    std::vector<TallyExpr> tallies;  // every active candidate of the round
    std::vector<Inequality> inequalities;

    const TallyExpr& tally(Cand c) const;
};

struct ConstraintSet {
    Structure structure;
    Quota quota;
    std::vector<ConstraintGroup> groups;

    std::size_t inequality_count() const;
};

ConstraintSet generate_constraints(const Structure& structure, const Quota& quota);

// Substitutes aggregate counts of `ballots` and checks every group in order against `quota`.
bool evaluate_constraints(const ConstraintSet& constraints, const WeightedBallotSet& ballots,
                          const ElectionConfig& config, const Quota& quota);
bool evaluate_constraints(const ConstraintSet& constraints, const WeightedBallotSet& ballots,
                          const ElectionConfig& config);

std::string format_tally(const TallyExpr& expr, const ConstraintSet& set, const WeightedBallotSet& names);
std::string format_group(const ConstraintGroup& group, const ConstraintSet& set, const WeightedBallotSet& names);
std::string format_constraints(const ConstraintSet& set, const WeightedBallotSet& names);

// Engine path: run the election and compare structures.
bool check_structure(const WeightedBallotSet& ballots, const Structure& structure, const ElectionConfig& config);
// Constraint path: generate and evaluate the region-defining inequalities.
bool check_structure_by_constraints(const WeightedBallotSet& ballots, const Structure& structure,
                                    const ElectionConfig& config);

}  // namespace stvopt
