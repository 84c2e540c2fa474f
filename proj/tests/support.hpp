#pragma once
// Shared fixtures and brute-force oracles for the test binaries.

#include "stvopt/core_model.hpp"
#include "stvopt/robustness.hpp"
#include "stvopt/stv_engine.hpp"
#include "stvopt/structure_space.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

using namespace stvopt;

// District ballots: three candidates, nine ballot columns, 36626 voters.
inline WeightedBallotSet district() {
    auto b = WeightedBallotSet::with_ids({"E", "M", "N"});
    b.add({"E", "M", "N"}, 5237);
    b.add({"E", "N", "M"}, 3316);
    b.add({"E"}, 5566);
    b.add({"M", "E", "N"}, 4050);
    b.add({"M", "N", "E"}, 5708);
    b.add({"M"}, 1894);
    b.add({"N", "E", "M"}, 2251);
    b.add({"N", "M", "E"}, 6909);
    b.add({"N"}, 1695);
    return b;
}

// Ties go to the order the candidates finish in without additions.
inline ElectionConfig district_config(const WeightedBallotSet& b) {
    ElectionConfig c;
    c.tie_break = {b.at("M"), b.at("E"), b.at("N")};
    return c;
}

// 100 voters, two seats, fractional weights; A > C > B > D.
inline WeightedBallotSet two_seat() {
    auto b = WeightedBallotSet::with_ids({"A", "B", "C", "D"});
    b.add({"A", "B"}, Rational(20, 3));
    b.add({"A", "C"}, Rational(70, 3));
    b.add({"B", "A"}, 10);
    b.add({"B", "D"}, 15);
    b.add({"C", "A"}, 4);
    b.add({"C", "B", "A"}, 10);
    b.add({"C", "B", "D"}, 5);
    b.add({"C", "D"}, 4);
    b.add({"D", "A", "C"}, 10);
    b.add({"D", "B"}, 3);
    b.add({"D", "C"}, 9);
    return b;
}

// 100 voters, two seats; one [A,C] voter switching to [D,C] flips the whole order.
inline WeightedBallotSet flip_base() {
    auto b = WeightedBallotSet::with_ids({"A", "B", "C", "D"});
    b.add({"A", "D", "C"}, 17);
    b.add({"A", "B"}, 5);
    b.add({"A", "C"}, 1);
    b.add({"D", "A", "B"}, Rational(13, 3));
    b.add({"D", "A", "C"}, Rational(26, 3));
    b.add({"D", "B"}, 9);
    b.add({"B"}, 25);
    b.add({"C"}, 30);
    return b;
}

inline WeightedBallotSet flip_changed() {
    const auto b = flip_base();
    const Ranking moved = b.parse_ranking({"A", "C"});
    WeightedBallotSet out(b.candidates());
    for (const auto& [r, w] : b.entries())
        if (r != moved) out.add(r, w);
    out.add({"D", "C"}, 1);
    return out;
}

// Respondent records from ballot-type counts, one unit-weight record per voter.
inline RespondentSet poll(const std::vector<std::string>& ids,
                          const std::vector<std::pair<std::vector<std::string>, int>>& counts) {
    auto shell = WeightedBallotSet::with_ids(ids);
    RespondentSet out(shell.candidates());
    int next = 0;
    for (const auto& [ranking, count] : counts)
        for (int i = 0; i < count; ++i) out.add({"r" + std::to_string(++next), shell.parse_ranking(ranking), 1});
    return out;
}

// 800 respondents, five strong candidates and a tail of eight with 40 first choices between them.
inline RespondentSet long_tail_poll() {
    return poll({"T", "H", "R", "D", "C", "P", "Sc", "Hr", "Ht", "Y", "B", "E", "Su"},
                {{{"T"}, 150}, {{"T", "D"}, 80}, {{"T", "R"}, 70},
                 {{"H", "C"}, 60}, {{"H", "T"}, 40}, {{"H"}, 50},
                 {{"R", "D"}, 60}, {{"R", "T"}, 40}, {{"R"}, 20},
                 {{"D", "R"}, 50}, {{"D", "T"}, 30}, {{"D"}, 20},
                 {{"C", "H"}, 50}, {{"C"}, 40},
                 {{"P", "D"}, 6}, {{"P", "T"}, 4},
                 {{"Sc", "R"}, 5}, {{"Sc", "P", "H"}, 3},
                 {{"Hr", "H"}, 6},
                 {{"Ht", "T"}, 5},
                 {{"Y", "Hr", "C"}, 4},
                 {{"B", "D"}, 3},
                 {{"E", "R"}, 2},
                 {{"Su", "H"}, 2}});
}

// Quota out of reach, so the race runs on eliminations to the last round.
inline ElectionConfig long_tail_config() {
    ElectionConfig c;
    c.quota_override = Rational(800);
    return c;
}

// E trails M in the final round by about 150, but M leads N by only 10 and M's voters go to E.
// Lifting N past M is the cheap route to first place for E.
inline RespondentSet spoiler_poll() {
    return poll({"E", "M", "N", "P", "S"},
                {{{"E"}, 330},
                 {{"M", "E"}, 200}, {{"M"}, 80},
                 {{"N", "M"}, 200}, {{"N"}, 70},
                 {{"P", "E"}, 6}, {{"S", "M"}, 5}});
}

inline ElectionConfig seats(int k) {
    ElectionConfig c;
    c.seats = k;
    return c;
}

}  // namespace fixtures

namespace oracle {

using namespace stvopt;

// All rankings worth adding: every ordered subset of size 1..n-1 (a full ranking behaves like its
// n-1 prefix), plus the empty padding ballot.
inline std::vector<Ranking> ballot_types(std::size_t n) {
    std::vector<Ranking> out{Ranking{}};
    std::function<void(Ranking&, std::vector<char>&)> grow = [&](Ranking& cur, std::vector<char>& used) {
        if (!cur.empty()) out.push_back(cur);
        if (cur.size() + 1 >= n) return;
        for (std::size_t c = 0; c < n; ++c)
            if (!used[c]) {
                used[c] = 1;
                cur.push_back(cand(c));
                grow(cur, used);
                cur.pop_back();
                used[c] = 0;
            }
    };
    Ranking cur;
    std::vector<char> used(n, 0);
    grow(cur, used);
    if (n == 1) out.push_back(Ranking{cand(0)});
    return out;
}

// Calls fn(counts) for every multiset of exactly `size` items over `types` (counts indexed by type).
inline void for_each_multiset(std::size_t types, int size, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> counts(types, 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
        if (i + 1 == types) {
            counts[i] = left;
            fn(counts);
            counts[i] = 0;
            return;
        }
        for (int c = left; c >= 0; --c) {
            counts[i] = c;
            rec(i + 1, left - c);
        }
        counts[i] = 0;
    };
    if (types == 0) return;
    rec(0, size);
}

inline WeightedBallotSet with_counts(const WeightedBallotSet& base, const std::vector<Ranking>& types,
                                     const std::vector<int>& counts) {
    WeightedBallotSet m = base;
    for (std::size_t i = 0; i < types.size(); ++i)
        if (counts[i] > 0) m.add(types[i], counts[i]);
    return m;
}

// Cheapest number of added ballots reaching each structure, over all additions of at most max_budget.
inline std::map<Structure, int> min_cost_by_structure(const WeightedBallotSet& ballots, const ElectionConfig& config,
                                                      int max_budget) {
    const auto types = ballot_types(ballots.candidate_count());
    std::map<Structure, int> best;
    for (int size = 0; size <= max_budget; ++size)
        for_each_multiset(types.size(), size, [&](const std::vector<int>& counts) {
            const Structure s = structure_of(run_election(with_counts(ballots, types, counts), config));
            best.emplace(s, size);
        });
    return best;
}

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
    bool coin() { return uniform(0, 1) == 1; }
};

inline Ranking random_ranking(Rng& rng, std::size_t n, std::size_t min_len = 1) {
    Ranking perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = cand(i);
    std::shuffle(perm.begin(), perm.end(), rng.gen);
    perm.resize(static_cast<std::size_t>(rng.uniform(static_cast<int>(min_len), static_cast<int>(n))));
    return perm;
}

inline WeightedBallotSet random_instance(Rng& rng, std::size_t n, int max_types, int max_weight) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::string(1, static_cast<char>('A' + i)));
    auto b = WeightedBallotSet::with_ids(ids);
    const int types = rng.uniform(1, max_types);
    for (int t = 0; t < types; ++t) b.add(random_ranking(rng, n), rng.uniform(1, max_weight));
    return b;
}

inline ElectionConfig random_config(Rng& rng, std::size_t n, int max_seats) {
    ElectionConfig c;
    c.seats = rng.uniform(1, std::max(1, std::min<int>(max_seats, static_cast<int>(n) - 1)));
    for (std::size_t i = 0; i < n; ++i) c.tie_break.push_back(cand(i));
    std::shuffle(c.tie_break.begin(), c.tie_break.end(), rng.gen);
    return c;
}

}  // namespace oracle
