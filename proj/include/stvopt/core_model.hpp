#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stvopt {

// Exact vote arithmetic. Weights, tallies, quotas and transfer fractions are all rationals.
using Rational = mpq_class;

// Dense index of a candidate inside one WeightedBallotSet.
enum class Cand : std::uint16_t {};

constexpr std::size_t idx(Cand c) noexcept { return static_cast<std::size_t>(c); }
constexpr Cand cand(std::size_t i) noexcept { return static_cast<Cand>(i); }

using Ranking = std::vector<Cand>;

struct Candidate {
    std::string id;
    std::string display_name;

    friend bool operator==(const Candidate& a, const Candidate& b) { return a.id == b.id; }
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A multiset of ranked ballots with exact non-negative weights.
// Zero-weight entries are dropped on insertion; the empty ranking carries exhausted or padding weight.
class WeightedBallotSet {
public:
    WeightedBallotSet() = default;
    explicit WeightedBallotSet(std::vector<Candidate> candidates);
    static WeightedBallotSet with_ids(const std::vector<std::string>& ids);

    Cand add_candidate(Candidate c);
    void add(Ranking ranking, const Rational& weight);
    // Convenience for fixtures: ranking given by candidate ids.
    void add(const std::vector<std::string>& ids, const Rational& weight);
    void add(std::initializer_list<const char*> ids, const Rational& weight);

    std::size_t candidate_count() const noexcept { return candidates_.size(); }
    const std::vector<Candidate>& candidates() const noexcept { return candidates_; }
    const Candidate& candidate(Cand c) const { return candidates_.at(idx(c)); }
    std::optional<Cand> find(std::string_view id) const;
    Cand at(std::string_view id) const;

    const std::map<Ranking, Rational>& entries() const noexcept { return entries_; }
    Rational total_weight() const;
    Rational weight_of(const Ranking& r) const;
    // Number of distinct ballots with positive weight (m).
    std::size_t distinct_ballots() const noexcept { return entries_.size(); }

    std::string format(const Ranking& r) const;
    Ranking parse_ranking(const std::vector<std::string>& ids) const;

    friend bool operator==(const WeightedBallotSet&, const WeightedBallotSet&) = default;

private:
    std::vector<Candidate> candidates_;
    std::map<Ranking, Rational> entries_;
};

struct Quota {
    Rational value;
    friend bool operator==(const Quota&, const Quota&) = default;
};

// Ties are resolved by tie_break: a candidate listed earlier is favoured, both when the highest
// tally wins and when the lowest tally is eliminated. An empty list means declaration order.
struct ElectionConfig {
    int seats = 1;
    std::vector<Cand> tie_break;
    std::optional<Rational> quota_override;

    // Position of each candidate in the effective tie-break order (lower is favoured).
    std::vector<int> tie_ranks(std::size_t n) const;
    void validate(std::size_t n) const;
};

struct AggregatedCount {
    Ranking prefix;
    Rational value;
};

Rational floor_of(const Rational& q);
Rational ceil_of(const Rational& q);

Quota compute_quota(const Rational& total_weight, const ElectionConfig& config);
Quota compute_quota(const WeightedBallotSet& ballots, const ElectionConfig& config);

Rational aggregate_count(const WeightedBallotSet& ballots, std::span<const Cand> prefix);
AggregatedCount aggregated(const WeightedBallotSet& ballots, Ranking prefix);

// Weight of ballots ranking exactly `prefix` and nothing after it.
Rational exact_ballot_weight(const WeightedBallotSet& ballots, const Ranking& prefix);

std::string rational_to_string(const Rational& q);

}  // namespace stvopt
