#include "stvopt/core_model.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace stvopt {

WeightedBallotSet::WeightedBallotSet(std::vector<Candidate> candidates) {
    for (auto& c : candidates) add_candidate(std::move(c));
}

WeightedBallotSet WeightedBallotSet::with_ids(const std::vector<std::string>& ids) {
    WeightedBallotSet set;
    for (const auto& id : ids) set.add_candidate({id, id});
    return set;
}

Cand WeightedBallotSet::add_candidate(Candidate c) {
    if (c.id.empty()) throw DataError("candidate id must not be empty");
    if (find(c.id)) throw DataError("duplicate candidate id '" + c.id + "'");
    if (candidates_.size() >= 0xFFFF) throw DataError("too many candidates");
    if (c.display_name.empty()) c.display_name = c.id;
    candidates_.push_back(std::move(c));
    return cand(candidates_.size() - 1);
}

void WeightedBallotSet::add(Ranking ranking, const Rational& weight) {
    if (sgn(weight) < 0) throw DataError("ballot weight must be non-negative");
    std::vector<bool> seen(candidates_.size(), false);
    for (Cand c : ranking) {
        if (idx(c) >= candidates_.size()) throw DataError("ballot names an unknown candidate");
        if (seen[idx(c)]) throw DataError("ballot ranks candidate '" + candidates_[idx(c)].id + "' twice");
        seen[idx(c)] = true;
    }
    if (sgn(weight) == 0) return;
    Rational w = weight;
    w.canonicalize();  // callers may pass an unreduced p/q
    entries_[std::move(ranking)] += w;
}

void WeightedBallotSet::add(const std::vector<std::string>& ids, const Rational& weight) {
    add(parse_ranking(ids), weight);
}

void WeightedBallotSet::add(std::initializer_list<const char*> ids, const Rational& weight) {
    add(std::vector<std::string>(ids.begin(), ids.end()), weight);
}

std::optional<Cand> WeightedBallotSet::find(std::string_view id) const {
    for (std::size_t i = 0; i < candidates_.size(); ++i)
        if (candidates_[i].id == id) return cand(i);
    return std::nullopt;
}

Cand WeightedBallotSet::at(std::string_view id) const {
    if (auto c = find(id)) return *c;
    throw DataError("unknown candidate '" + std::string(id) + "'");
}

Rational WeightedBallotSet::total_weight() const {
    Rational total = 0;
    for (const auto& [r, w] : entries_) total += w;
    return total;
}

Rational WeightedBallotSet::weight_of(const Ranking& r) const {
    auto it = entries_.find(r);
    return it == entries_.end() ? Rational(0) : it->second;
}

std::string WeightedBallotSet::format(const Ranking& r) const {
    std::string out = "[";
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += ",";
        out += candidates_.at(idx(r[i])).id;
    }
    return out + "]";
}

Ranking WeightedBallotSet::parse_ranking(const std::vector<std::string>& ids) const {
    Ranking r;
    r.reserve(ids.size());
    for (const auto& id : ids) r.push_back(at(id));
    return r;
}

std::vector<int> ElectionConfig::tie_ranks(std::size_t n) const {
    std::vector<int> ranks(n);
    if (tie_break.empty()) {
        std::iota(ranks.begin(), ranks.end(), 0);
        return ranks;
    }
    for (std::size_t i = 0; i < tie_break.size(); ++i) ranks.at(idx(tie_break[i])) = static_cast<int>(i);
    return ranks;
}

void ElectionConfig::validate(std::size_t n) const {
    if (seats < 1) throw DataError("seats must be at least 1");
    if (quota_override && sgn(*quota_override) <= 0) throw DataError("quota override must be positive");
    if (tie_break.empty()) return;
    if (tie_break.size() != n) throw DataError("tie-break order must list every candidate exactly once");
    std::set<Cand> seen(tie_break.begin(), tie_break.end());
    if (seen.size() != n) throw DataError("tie-break order repeats a candidate");
    for (Cand c : tie_break)
        if (idx(c) >= n) throw DataError("tie-break order names an unknown candidate");
}

Rational floor_of(const Rational& q) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return Rational(f);
}

Rational ceil_of(const Rational& q) {
    mpz_class c;
    mpz_cdiv_q(c.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return Rational(c);
}

Quota compute_quota(const Rational& total_weight, const ElectionConfig& config) {
    if (config.quota_override) return Quota{*config.quota_override};
    if (sgn(total_weight) <= 0) throw DataError("cannot compute a quota for an empty ballot set");
    Rational q = floor_of(total_weight / Rational(config.seats + 1)) + 1;
    return Quota{q};
}

Quota compute_quota(const WeightedBallotSet& ballots, const ElectionConfig& config) {
    return compute_quota(ballots.total_weight(), config);
}

Rational aggregate_count(const WeightedBallotSet& ballots, std::span<const Cand> prefix) {
    Rational total = 0;
    const Ranking key(prefix.begin(), prefix.end());
    // Rankings sharing a prefix are contiguous in lexicographic order.
    for (auto it = ballots.entries().lower_bound(key); it != ballots.entries().end(); ++it) {
        const Ranking& r = it->first;
        if (r.size() < prefix.size() || !std::equal(prefix.begin(), prefix.end(), r.begin())) break;
        total += it->second;
    }
    return total;
}

AggregatedCount aggregated(const WeightedBallotSet& ballots, Ranking prefix) {
    Rational v = aggregate_count(ballots, prefix);
    return AggregatedCount{std::move(prefix), std::move(v)};
}

Rational exact_ballot_weight(const WeightedBallotSet& ballots, const Ranking& prefix) {
    return ballots.weight_of(prefix);
}

std::string rational_to_string(const Rational& q) {
    if (q.get_den() == 1) return q.get_num().get_str();
    // Terminating decimals print as decimals, anything else as p/q.
    mpz_class den = q.get_den();
    int twos = 0, fives = 0;
    while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) { den /= 2; ++twos; }
    while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) { den /= 5; ++fives; }
    if (den != 1) return q.get_num().get_str() + "/" + q.get_den().get_str();
    const int digits = std::max(twos, fives);
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(digits));
    mpz_class scaled = q.get_num() * scale / q.get_den();
    const bool negative = scaled < 0;
    if (negative) scaled = -scaled;
    std::string s = scaled.get_str();
    if (s.size() <= static_cast<std::size_t>(digits)) s.insert(0, static_cast<std::size_t>(digits) + 1 - s.size(), '0');
    s.insert(s.size() - static_cast<std::size_t>(digits), ".");
    return negative ? "-" + s : s;
}

}  // namespace stvopt
