#include "stvopt/stv_engine.hpp"

#include <algorithm>
#include <stdexcept>

namespace stvopt {

std::string_view to_string(RoundKind k) {
    switch (k) {
        case RoundKind::QuotaWin: return "QuotaWin";
        case RoundKind::Elimination: return "Elimination";
        case RoundKind::FinalPlacement: return "FinalPlacement";
    }
    return "?";
}

Rational RoundOutcome::tally_of(Cand c) const {
    for (const auto& [k, v] : tallies_before)
        if (k == c) return v;
    return 0;
}

bool RoundOutcome::was_active(Cand c) const {
    return std::any_of(tallies_before.begin(), tallies_before.end(), [c](const auto& p) { return p.first == c; });
}

std::size_t ElectionOutcome::position_of(Cand c) const {
    auto it = std::find(order.begin(), order.end(), c);
    if (it == order.end()) throw std::out_of_range("candidate not in outcome order");
    return static_cast<std::size_t>(it - order.begin());
}

std::size_t ElectionOutcome::quota_wins() const {
    return static_cast<std::size_t>(
        std::count_if(rounds.begin(), rounds.end(), [](const RoundOutcome& r) { return r.kind == RoundKind::QuotaWin; }));
}

Rational transfer_surplus(const Rational& tally, const Quota& quota, const Rational& share) {
    if (sgn(tally) == 0) throw std::domain_error("surplus transfer from a zero tally");
    return share * (tally - quota.value) / tally;
}

namespace {

struct BallotState {
    std::size_t pos = 0;
    Rational carried;
};

}  // namespace

ElectionOutcome tabulate(std::span<const BallotEntry> ballots, std::size_t n, const ElectionConfig& config,
                         const Quota& quota) {
    const std::vector<int> ranks = config.tie_ranks(n);
    const Rational& Q = quota.value;

    std::vector<BallotState> state(ballots.size());
    std::vector<std::vector<std::size_t>> holders(n);
    std::vector<Rational> tally(n);
    std::vector<char> active(n, 1);
    Rational exhausted = 0;
    Rational retired = 0;

    auto place = [&](std::size_t b, std::size_t from) {
        const auto& r = ballots[b].ranking;
        for (std::size_t p = from; p < r.size(); ++p) {
            const std::size_t c = idx(r[p]);
            if (active[c]) {
                state[b].pos = p;
                holders[c].push_back(b);
                tally[c] += state[b].carried;
                return;
            }
        }
        exhausted += state[b].carried;
    };

    for (std::size_t b = 0; b < ballots.size(); ++b) {
        state[b].carried = ballots[b].weight;
        place(b, 0);
    }

    // a ranks above b: higher tally, ties to the favoured candidate.
    auto above = [&](std::size_t a, std::size_t b) {
        if (tally[a] != tally[b]) return tally[a] > tally[b];
        return ranks[a] < ranks[b];
    };

    ElectionOutcome out;
    out.quota = quota;
    out.order.assign(n, Cand{});
    out.sequence.assign(n, Label::W);
    out.rounds.reserve(n);
    std::size_t top = 0;
    std::size_t bottom = n == 0 ? 0 : n - 1;
    std::size_t remaining = n;

    for (int round = 1; remaining > 0; ++round) {
        RoundOutcome ro;
        ro.round_index = round;
        ro.exhausted_before = exhausted;
        ro.retired_before = retired;
        std::vector<std::size_t> live;
        live.reserve(remaining);
        for (std::size_t c = 0; c < n; ++c)
            if (active[c]) {
                live.push_back(c);
                ro.tallies_before.emplace_back(cand(c), tally[c]);
            }

        std::size_t best = live.front();
        for (std::size_t c : live)
            if (above(c, best)) best = c;

        std::size_t resolved;
        if (remaining == 1) {
            resolved = best;
            ro.kind = tally[best] >= Q ? RoundKind::QuotaWin : RoundKind::FinalPlacement;
            ro.margin = tally[best] - Q;
            out.order[top] = cand(best);
            out.sequence[static_cast<std::size_t>(round - 1)] = Label::W;
        } else if (tally[best] >= Q) {
            resolved = best;
            ro.kind = RoundKind::QuotaWin;
            ro.margin = tally[best] - Q;
            Rational fraction = (tally[best] - Q) / tally[best];
            ro.surplus_fraction = fraction;
            retired += Q;
            out.order[top++] = cand(best);
            out.sequence[static_cast<std::size_t>(round - 1)] = Label::W;
            active[best] = 0;
            tally[best] = 0;
            auto moving = std::move(holders[best]);
            holders[best].clear();
            for (std::size_t b : moving) {
                state[b].carried *= fraction;
                place(b, state[b].pos + 1);
            }
        } else {
            std::size_t worst = live.front();
            for (std::size_t c : live)
                if (above(worst, c)) worst = c;
            std::size_t runner = live.front() == worst ? live[1] : live.front();
            for (std::size_t c : live)
                if (c != worst && above(runner, c)) runner = c;
            resolved = worst;
            ro.kind = RoundKind::Elimination;
            ro.margin = tally[runner] - tally[worst];
            out.order[bottom--] = cand(worst);
            out.sequence[static_cast<std::size_t>(round - 1)] = Label::L;
            active[worst] = 0;
            tally[worst] = 0;
            auto moving = std::move(holders[worst]);
            holders[worst].clear();
            for (std::size_t b : moving) place(b, state[b].pos + 1);
        }
        ro.resolved = cand(resolved);
        out.rounds.push_back(std::move(ro));
        --remaining;
    }

    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(config.seats), n);
    out.winners.assign(out.order.begin(), out.order.begin() + static_cast<std::ptrdiff_t>(k));
    return out;
}

ElectionOutcome run_election(const WeightedBallotSet& ballots, const ElectionConfig& config) {
    const std::size_t n = ballots.candidate_count();
    if (n == 0) throw DataError("election has no candidates");
    config.validate(n);
    const Quota quota = compute_quota(ballots, config);
    std::vector<BallotEntry> entries;
    entries.reserve(ballots.entries().size());
    for (const auto& [r, w] : ballots.entries()) entries.push_back({std::span<const Cand>(r), w});
    return tabulate(entries, n, config, quota);
}

ElectionOutcome replay_with_additions(const WeightedBallotSet& ballots, const StrategyPlan& plan,
                                      const ElectionConfig& config) {
    return run_election(merge_plan(ballots, plan), config);
}

WeightedBallotSet merge_plan(const WeightedBallotSet& ballots, const StrategyPlan& plan) {
    WeightedBallotSet merged = ballots;
    for (const auto& [r, count] : plan.additions) {
        if (count < 0) throw DataError("plan counts must be non-negative");
        merged.add(r, Rational(static_cast<long>(count)));
    }
    if (plan.padding < 0) throw DataError("plan padding must be non-negative");
    if (plan.padding > 0) merged.add(Ranking{}, Rational(static_cast<long>(plan.padding)));
    return merged;
}

StrategyPlan remap_plan(const StrategyPlan& plan, const WeightedBallotSet& from, const WeightedBallotSet& to) {
    StrategyPlan out;
    out.padding = plan.padding;
    for (const auto& [r, count] : plan.additions) {
        Ranking mapped;
        mapped.reserve(r.size());
        for (Cand c : r) mapped.push_back(to.at(from.candidate(c).id));
        out.add(mapped, count);
    }
    return out;
}

std::string format_plan(const StrategyPlan& plan, const WeightedBallotSet& ballots) {
    std::string s;
    for (const auto& [r, count] : plan.additions) {
        if (!s.empty()) s += " + ";
        s += std::to_string(count) + " x " + ballots.format(r);
    }
    if (plan.padding > 0) {
        if (!s.empty()) s += " + ";
        s += std::to_string(plan.padding) + " x []";
    }
    return s.empty() ? "(no additions)" : s;
}

std::string format_sequence(std::span<const Label> seq) {
    std::string s;
    for (Label l : seq) s += static_cast<char>(l);
    return s;
}

std::string format_order(std::span<const Cand> order, const WeightedBallotSet& ballots) {
    std::string s;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i) s += ">";
        s += ballots.candidate(order[i]).id;
    }
    return s;
}

}  // namespace stvopt
