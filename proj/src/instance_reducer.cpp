#include "stvopt/instance_reducer.hpp"

#include <algorithm>
#include <numeric>

namespace stvopt {

namespace {

std::vector<char> membership(std::size_t n, std::span<const Cand> set) {
    std::vector<char> in(n, 0);
    for (Cand c : set) {
        if (idx(c) >= n) throw DataError("candidate set names an unknown candidate");
        in[idx(c)] = 1;
    }
    return in;
}

Rational first_choice(const WeightedBallotSet& b, Cand c) {
    const Ranking p{c};
    return aggregate_count(b, p);
}

}  // namespace

std::map<Cand, Rational> strict_support(const WeightedBallotSet& ballots, std::span<const Cand> pool,
                                        std::span<const Cand> excluded) {
    const std::size_t n = ballots.candidate_count();
    const auto in_pool = membership(n, pool);
    const auto in_excl = membership(n, excluded);
    for (std::size_t c = 0; c < n; ++c)
        if (in_pool[c] && in_excl[c]) throw DataError("strict support pool and excluded set overlap");
    std::map<Cand, Rational> out;
    for (Cand c : pool) out[c] = 0;
    for (const auto& [r, w] : ballots.entries()) {
        if (r.empty() || !in_pool[idx(r.front())]) continue;
        for (Cand c : r) {
            if (in_excl[idx(c)]) break;
            if (in_pool[idx(c)]) out[c] += w;
        }
    }
    return out;
}

WeightedBallotSet reduce_ballots(const WeightedBallotSet& ballots, std::span<const Cand> removed) {
    const std::size_t n = ballots.candidate_count();
    const auto gone = membership(n, removed);
    std::vector<Candidate> kept;
    std::vector<Cand> remap(n);
    for (std::size_t c = 0; c < n; ++c)
        if (!gone[c]) {
            remap[c] = cand(kept.size());
            kept.push_back(ballots.candidate(cand(c)));
        }
    WeightedBallotSet out(std::move(kept));
    for (const auto& [r, w] : ballots.entries()) {
        Ranking projected;
        for (Cand c : r)
            if (!gone[idx(c)]) projected.push_back(remap[idx(c)]);
        out.add(std::move(projected), w);
    }
    return out;
}

ElectionConfig restrict_config(const ElectionConfig& config, const WeightedBallotSet& from,
                               const WeightedBallotSet& to) {
    ElectionConfig out = config;
    out.tie_break.clear();
    if (config.tie_break.empty()) {
        // declaration order survives projection only if it is spelled out
        for (const auto& c : from.candidates())
            if (auto m = to.find(c.id)) out.tie_break.push_back(*m);
        return out;
    }
    for (Cand c : config.tie_break)
        if (auto m = to.find(from.candidate(c).id)) out.tie_break.push_back(*m);
    return out;
}

std::size_t ReductionReport::removed_count() const {
    std::size_t n = 0;
    for (const auto& g : removed) n += g.ids.size();
    return n;
}

std::vector<std::string> ReductionReport::removed_ids() const {
    std::vector<std::string> out;
    for (const auto& g : removed) out.insert(out.end(), g.ids.begin(), g.ids.end());
    return out;
}

namespace {

struct GroupTest {
    bool removable = false;
    Rational margin;
};

// Can `group` be eliminated first, in some order, whatever `budget` ballots are added?
GroupTest test_group(const WeightedBallotSet& b, const std::vector<Cand>& group, const std::vector<Cand>& rest,
                     const Rational& budget, const Rational& Q) {
    GroupTest t;
    if (group.empty() || rest.empty()) return t;
    const auto best_case = strict_support(b, group, rest);  // a member's tally if it outlasts the rest of the group
    Rational worst_member = 0;
    for (const auto& [c, s] : best_case) worst_member = std::max(worst_member, Rational(budget + s));
    Rational margin;
    bool first = true;
    for (Cand j : rest) {
        // j holds at least its first choices throughout, and at most everything the group can pass it.
        const Rational low = first_choice(b, j);
        std::vector<Cand> pool = group;
        pool.push_back(j);
        std::vector<Cand> others;
        for (Cand o : rest)
            if (o != j) others.push_back(o);
        const Rational high = strict_support(b, pool, others)[j] + budget;
        if (!(worst_member < low && high < Q)) return t;
        const Rational m = low - worst_member;
        if (first || m < margin) margin = m;
        first = false;
    }
    t.removable = true;
    t.margin = margin;
    return t;
}

}  // namespace

ReductionReport remove_irrelevant(const WeightedBallotSet& ballots, std::int64_t budget, const ElectionConfig& config,
                                  ReductionOptions options) {
    if (budget < 0) throw DataError("budget must be non-negative");
    config.validate(ballots.candidate_count());
    ReductionReport report;
    report.budget = budget;
    report.quota = compute_quota(ballots, config);
    const Rational& Q = report.quota.value;
    const Rational B(static_cast<long>(budget));

    WeightedBallotSet current = ballots;
    ElectionConfig cfg = restrict_config(config, ballots, ballots);
    for (;;) {
        const std::size_t n = current.candidate_count();
        if (n <= 1) break;
        const auto ranks = cfg.tie_ranks(n);
        std::vector<Rational> v1(n);
        for (std::size_t c = 0; c < n; ++c) v1[c] = first_choice(current, cand(c));
        std::vector<Cand> ascending;
        for (std::size_t c = 0; c < n; ++c)
            if (v1[c] < Q) ascending.push_back(cand(c));  // candidates already at quota never join a group
        std::sort(ascending.begin(), ascending.end(), [&](Cand a, Cand b) {
            if (v1[idx(a)] != v1[idx(b)]) return v1[idx(a)] < v1[idx(b)];
            return ranks[idx(a)] > ranks[idx(b)];  // the one a tie would eliminate comes first
        });

        std::vector<Cand> group;
        std::vector<Cand> chosen;
        Rational chosen_margin;
        for (Cand next : ascending) {
            if (!group.empty()) {
                std::vector<Cand> rest;
                for (std::size_t c = 0; c < n; ++c)
                    if (std::find(group.begin(), group.end(), cand(c)) == group.end()) rest.push_back(cand(c));
                const auto s = strict_support(current, group, rest);
                if (std::any_of(s.begin(), s.end(), [&](const auto& p) { return B + p.second >= Q; })) break;
            }
            if (group.size() + 2 > n) break;  // keep at least one survivor
            group.push_back(next);
            std::vector<Cand> rest;
            for (std::size_t c = 0; c < n; ++c)
                if (std::find(group.begin(), group.end(), cand(c)) == group.end()) rest.push_back(cand(c));
            if (auto t = test_group(current, group, rest, B, Q); t.removable) {
                chosen = group;
                chosen_margin = t.margin;
                break;
            }
            if (options.aggressive && group.size() >= 2) {
                const auto s = strict_support(current, group, rest);
                Cand strongest = group.front();
                for (Cand c : group)
                    if (s.at(c) > s.at(strongest)) strongest = c;
                std::vector<Cand> trimmed;
                for (Cand c : group)
                    if (c != strongest) trimmed.push_back(c);
                std::vector<Cand> wider = rest;
                wider.push_back(strongest);
                if (auto t = test_group(current, trimmed, wider, B, Q); t.removable) {
                    chosen = trimmed;
                    chosen_margin = t.margin;
                    break;
                }
            }
        }
        if (chosen.empty()) break;

        RemovedGroup g;
        for (Cand c : chosen) g.ids.push_back(current.candidate(c).id);
        g.margin = chosen_margin;
        report.removed.push_back(std::move(g));
        WeightedBallotSet next = reduce_ballots(current, chosen);
        cfg = restrict_config(cfg, current, next);
        current = std::move(next);
    }
    report.surviving_ballots = std::move(current);
    return report;
}

bool SequenceBounds::admits(const Sequence& s) const {
    if (s.wins_before_last() > max_wins) return false;
    for (std::size_t r = 0; r < min_initial_losses && r + 1 < s.size(); ++r)
        if (s.labels[r] != Label::L) return false;
    return true;
}

std::size_t predict_wins(const WeightedBallotSet& ballots, std::int64_t budget, const ElectionConfig& config) {
    if (budget < 0) throw DataError("budget must be non-negative");
    const std::size_t n = ballots.candidate_count();
    const Rational Q = compute_quota(ballots, config).value;
    const Rational B(static_cast<long>(budget));
    std::vector<Cand> all(n);
    for (std::size_t c = 0; c < n; ++c) all[c] = cand(c);
    const auto reach = strict_support(ballots, all, {});
    // A quota winner needs at least Q from ballots that rank it, added ones included.
    std::vector<Cand> capable;
    for (const auto& [c, s] : reach)
        if (s + B >= Q) capable.push_back(c);
    // Weight of ballots ranking some capable candidate, each counted once at the first one it reaches.
    Rational unique = 0;
    for (const auto& [r, w] : ballots.entries())
        if (std::any_of(r.begin(), r.end(),
                        [&](Cand c) { return std::find(capable.begin(), capable.end(), c) != capable.end(); }))
            unique += w;
    const Rational wins = floor_of((B + unique) / Q);
    const std::size_t k = static_cast<std::size_t>(config.seats);
    const std::size_t bound = wins >= Rational(static_cast<long>(k)) ? k : static_cast<std::size_t>(wins.get_num().get_ui());
    return std::min(bound, n == 0 ? 0 : n - 1);
}

std::size_t predict_losses(const WeightedBallotSet& ballots, std::int64_t budget, const ElectionConfig& config) {
    if (budget < 0) throw DataError("budget must be non-negative");
    const std::size_t n = ballots.candidate_count();
    if (n <= 1) return 0;
    const Rational Q = compute_quota(ballots, config).value;
    const Rational B(static_cast<long>(budget));
    if (ballots.total_weight() + B < Q) return n - 1;
    std::vector<Rational> v1(n);
    for (std::size_t c = 0; c < n; ++c) v1[c] = first_choice(ballots, cand(c));
    std::vector<Rational> desc = v1;
    std::sort(desc.begin(), desc.end(), std::greater<>());
    const Rational& top = desc.front();
    if (top + B >= Q) return 0;

    // Votes each candidate could hand on if eliminated: ballots that rank someone after it.
    std::vector<Rational> transfers(n);
    for (const auto& [r, w] : ballots.entries())
        if (r.size() > 1) transfers[idx(r.front())] += w;
    std::sort(transfers.begin(), transfers.end(), std::greater<>());
    std::size_t losses = 1;
    Rational stacked = top + B;
    while (losses <= transfers.size()) {
        stacked += transfers[losses - 1];
        if (stacked >= Q) break;
        ++losses;
    }
    return std::min(losses, n - 1);
}

SequenceBounds sequence_bounds(const WeightedBallotSet& ballots, std::int64_t budget, const ElectionConfig& config) {
    return SequenceBounds{predict_wins(ballots, budget, config), predict_losses(ballots, budget, config)};
}

}  // namespace stvopt
