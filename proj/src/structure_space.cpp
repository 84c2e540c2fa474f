#include "stvopt/structure_space.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace stvopt {

std::size_t Sequence::wins_before_last() const {
    if (labels.empty()) return 0;
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end() - 1, Label::W));
}

Sequence Sequence::parse(std::string_view text) {
    Sequence s;
    for (char ch : text) {
        if (ch == 'W' || ch == 'w') s.labels.push_back(Label::W);
        else if (ch == 'L' || ch == 'l') s.labels.push_back(Label::L);
        else if (ch == ',' || ch == ' ' || ch == '[' || ch == ']') continue;
        else throw DataError("sequence labels must be W or L");
    }
    return s;
}

std::vector<Cand> Structure::resolution() const {
    const std::size_t n = order.size();
    std::vector<Cand> out;
    out.reserve(n);
    if (n == 0) return out;
    std::size_t top = 0, bottom = n - 1;
    for (std::size_t r = 0; r < n; ++r) {
        if (r + 1 == n) out.push_back(order[top]);
        else if (sequence.labels[r] == Label::W) out.push_back(order[top++]);
        else out.push_back(order[bottom--]);
    }
    return out;
}

bool Structure::well_formed(std::size_t n) const {
    if (order.size() != n || sequence.size() != n) return false;
    if (n > 0 && sequence.labels.back() != Label::W) return false;
    std::vector<bool> seen(n, false);
    for (Cand c : order) {
        if (idx(c) >= n || seen[idx(c)]) return false;
        seen[idx(c)] = true;
    }
    return true;
}

Structure structure_of(const ElectionOutcome& outcome) {
    return Structure{outcome.order, Sequence{outcome.sequence}};
}

std::vector<Sequence> enumerate_all_sequences(std::size_t n) {
    std::vector<Sequence> out;
    if (n == 0) return out;
    if (n > 63) throw std::invalid_argument("too many rounds to enumerate");
    const std::uint64_t count = std::uint64_t{1} << (n - 1);
    out.reserve(count);
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        Sequence s;
        s.labels.reserve(n);
        // Most significant bit is round 1; a set bit is an elimination.
        for (std::size_t r = 0; r + 1 < n; ++r)
            s.labels.push_back(((mask >> (n - 2 - r)) & 1U) ? Label::L : Label::W);
        s.labels.push_back(Label::W);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sequence> enumerate_feasible_sequences(std::size_t n, std::size_t k) {
    std::vector<Sequence> out;
    for (auto& s : enumerate_all_sequences(n))
        if (s.wins_before_last() <= k) out.push_back(std::move(s));
    return out;
}

std::uint64_t feasible_sequence_bound(std::size_t n, std::size_t k) {
    std::uint64_t total = 0;
    std::uint64_t binom = 1;  // C(n, 0)
    for (std::size_t j = 1; j <= k && j <= n; ++j) {
        binom = binom * (n - j + 1) / j;
        total += binom;
    }
    return total;
}

// ---- constraints ----

const TallyExpr& ConstraintGroup::tally(Cand c) const {
    for (const auto& t : tallies)
        if (t.candidate == c) return t;
    throw std::out_of_range("candidate not active in constraint group");
}

std::size_t ConstraintSet::inequality_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.inequalities.size();
    return n;
}

namespace {

struct Schedule {
    std::vector<Cand> resolved;  // by round
    std::vector<int> round_of;   // by candidate, 1-based
    std::vector<Label> label_of; // by candidate
};

Schedule make_schedule(const Structure& s) {
    Schedule sch;
    sch.resolved = s.resolution();
    const std::size_t n = sch.resolved.size();
    sch.round_of.assign(n, 0);
    sch.label_of.assign(n, Label::W);
    for (std::size_t r = 0; r < n; ++r) {
        sch.round_of[idx(sch.resolved[r])] = static_cast<int>(r + 1);
        sch.label_of[idx(sch.resolved[r])] = s.sequence.labels[r];
    }
    return sch;
}

// Winners whose surplus a ballot with this out-of-contest prefix has passed through.
std::vector<Cand> damping_of(const Ranking& path, const Schedule& sch) {
    std::vector<Cand> damped;
    std::size_t h = 0;
    while (h < path.size()) {
        const Cand holder = path[h];
        if (sch.label_of[idx(holder)] == Label::W) damped.push_back(holder);
        const int left_at = sch.round_of[idx(holder)];
        std::size_t next = h + 1;
        while (next < path.size() && sch.round_of[idx(path[next])] < left_at) ++next;
        h = next;
    }
    return damped;
}

void extend_paths(const std::vector<Cand>& pool, std::vector<bool>& used, Ranking& path, Cand target,
                  const Schedule& sch, std::vector<PathTerm>& out) {
    Ranking full = path;
    full.push_back(target);
    out.push_back(PathTerm{std::move(full), damping_of(path, sch)});
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        path.push_back(pool[i]);
        extend_paths(pool, used, path, target, sch, out);
        path.pop_back();
        used[i] = false;
    }
}

}  // namespace

ConstraintSet generate_constraints(const Structure& structure, const Quota& quota) {
    ConstraintSet set{structure, quota, {}};
    const std::size_t n = structure.order.size();
    if (!structure.well_formed(n)) throw std::invalid_argument("malformed structure");
    const Schedule sch = make_schedule(structure);

    for (std::size_t r = 0; r + 1 < n; ++r) {
        ConstraintGroup g;
        g.round = static_cast<int>(r + 1);
        g.resolved = sch.resolved[r];
        g.label = structure.sequence.labels[r];
        const std::vector<Cand> out_of_contest(sch.resolved.begin(), sch.resolved.begin() + static_cast<std::ptrdiff_t>(r));
        // Active candidates listed in order position, matching the way the order reads.
        for (Cand c : structure.order) {
            if (sch.round_of[idx(c)] <= static_cast<int>(r)) continue;
            TallyExpr t{c, g.round, {}};
            std::vector<bool> used(out_of_contest.size(), false);
            Ranking path;
            extend_paths(out_of_contest, used, path, c, sch, t.terms);
            g.tallies.push_back(std::move(t));
        }
        const Cand s = g.resolved;
        if (g.label == Label::L) {
            for (const auto& t : g.tallies)
                if (t.candidate != s) g.inequalities.push_back({Relation::BelowQuota, t.candidate, t.candidate});
            for (const auto& t : g.tallies)
                if (t.candidate != s) g.inequalities.push_back({Relation::Outranks, t.candidate, s});
            g.inequalities.push_back({Relation::BelowQuota, s, s});
        } else {
            for (const auto& t : g.tallies)
                if (t.candidate != s) g.inequalities.push_back({Relation::Outranks, s, t.candidate});
            g.inequalities.push_back({Relation::ReachesQuota, s, s});
        }
        set.groups.push_back(std::move(g));
    }
    // The final round is a forced placement and contributes an empty group.
    if (n > 0) {
        ConstraintGroup last;
        last.round = static_cast<int>(n);
        last.resolved = sch.resolved.back();
        last.label = Label::W;
        set.groups.push_back(std::move(last));
    }
    return set;
}

bool evaluate_constraints(const ConstraintSet& constraints, const WeightedBallotSet& ballots,
                          const ElectionConfig& config, const Quota& quota) {
    const std::vector<int> ranks = config.tie_ranks(ballots.candidate_count());
    const Rational& Q = quota.value;
    std::map<Cand, Rational> factor;
    for (const auto& g : constraints.groups) {
        std::map<Cand, Rational> value;
        for (const auto& t : g.tallies) {
            Rational sum = 0;
            for (const auto& term : t.terms) {
                Rational v = aggregate_count(ballots, term.prefix);
                if (sgn(v) == 0) continue;
                for (Cand w : term.damped_by) v *= factor.at(w);
                sum += v;
            }
            value.emplace(t.candidate, std::move(sum));
        }
        for (const auto& ineq : g.inequalities) {
            const Rational& a = value.at(ineq.a);
            bool ok = false;
            switch (ineq.relation) {
                case Relation::BelowQuota: ok = Q > a; break;
                case Relation::ReachesQuota: ok = a >= Q; break;
                case Relation::Outranks: {
                    const Rational& b = value.at(ineq.b);
                    ok = a > b || (a == b && ranks[idx(ineq.a)] < ranks[idx(ineq.b)]);
                    break;
                }
            }
            if (!ok) return false;
        }
        if (g.label == Label::W && !g.tallies.empty()) {
            const Rational& t = value.at(g.resolved);
            factor[g.resolved] = (t - Q) / t;
        }
    }
    return true;
}

bool evaluate_constraints(const ConstraintSet& constraints, const WeightedBallotSet& ballots,
                          const ElectionConfig& config) {
    return evaluate_constraints(constraints, ballots, config, compute_quota(ballots, config));
}

namespace {

std::string format_term(const PathTerm& t, const WeightedBallotSet& names) {
    std::string s = "V" + std::to_string(t.prefix.size()) + "(";
    for (std::size_t i = 0; i < t.prefix.size(); ++i) {
        if (i) s += ",";
        s += names.candidate(t.prefix[i]).id;
    }
    return s + ")";
}

const TallyExpr* win_tally(const ConstraintSet& set, Cand w) {
    for (const auto& g : set.groups)
        if (g.label == Label::W && g.resolved == w && !g.tallies.empty()) return &g.tally(w);
    return nullptr;
}

}  // namespace

std::string format_tally(const TallyExpr& expr, const ConstraintSet& set, const WeightedBallotSet& names) {
    // Undamped terms first, then one bracket per distinct chain of surplus factors.
    std::vector<std::pair<std::vector<Cand>, std::vector<const PathTerm*>>> buckets;
    for (const auto& term : expr.terms) {
        auto it = std::find_if(buckets.begin(), buckets.end(), [&](const auto& b) { return b.first == term.damped_by; });
        if (it == buckets.end()) buckets.push_back({term.damped_by, {&term}});
        else it->second.push_back(&term);
    }
    std::stable_sort(buckets.begin(), buckets.end(), [](const auto& a, const auto& b) { return a.first.size() < b.first.size(); });
    std::string out;
    for (const auto& [damped, terms] : buckets) {
        std::string part;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            if (i) part += " + ";
            part += format_term(*terms[i], names);
        }
        if (!out.empty()) out += " + ";
        if (damped.empty()) {
            out += part;
            continue;
        }
        out += "(" + part + ")";
        for (Cand w : damped) {
            const TallyExpr* wt = win_tally(set, w);
            out += "(1 - Q/(" + (wt ? format_tally(*wt, set, names) : names.candidate(w).id) + "))";
        }
    }
    return out.empty() ? "0" : out;
}

std::string format_group(const ConstraintGroup& g, const ConstraintSet& set, const WeightedBallotSet& names) {
    if (g.tallies.empty()) return "";
    const std::string s = format_tally(g.tally(g.resolved), set, names);
    std::string others;
    for (const auto& t : g.tallies) {
        if (t.candidate == g.resolved) continue;
        if (!others.empty()) others += ", ";
        others += format_tally(t, set, names);
    }
    if (g.label == Label::L) return "Q > " + others + " > " + s;
    return s + " > " + others + ", and " + s + " >= Q";
}

std::string format_constraints(const ConstraintSet& set, const WeightedBallotSet& names) {
    std::string out;
    for (const auto& g : set.groups) {
        if (g.tallies.empty()) continue;
        out += "Round " + std::to_string(g.round) + " (" + names.candidate(g.resolved).id + " " +
               (g.label == Label::W ? "wins" : "eliminated") + "): " + format_group(g, set, names) + "\n";
    }
    return out;
}

bool check_structure(const WeightedBallotSet& ballots, const Structure& structure, const ElectionConfig& config) {
    return structure_of(run_election(ballots, config)) == structure;
}

bool check_structure_by_constraints(const WeightedBallotSet& ballots, const Structure& structure,
                                    const ElectionConfig& config) {
    const Quota q = compute_quota(ballots, config);
    return evaluate_constraints(generate_constraints(structure, q), ballots, config, q);
}

}  // namespace stvopt
