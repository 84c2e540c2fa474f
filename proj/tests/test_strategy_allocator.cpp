#include "doctest.h"
#include "support.hpp"

#include "stvopt/strategy_allocator.hpp"

using namespace stvopt;

namespace {

Structure make(const WeightedBallotSet& b, std::vector<std::string> ids, std::string_view seq) {
    Structure s;
    for (const auto& id : ids) s.order.push_back(b.at(id));
    s.sequence = Sequence::parse(seq);
    return s;
}

}  // namespace

TEST_CASE("spoiler route for the district runner-up") {
    const auto d = fixtures::district();
    const auto cfg = fixtures::district_config(d);
    const auto res = smart_allocate(d, make(d, {"E", "N", "M"}, "LLW"), 798, cfg);
    REQUIRE(res.feasible);
    CHECK(res.votes_used == 798);
    CHECK(res.plan.padding == 0);
    CHECK(res.plan.additions.at(Ranking{d.at("N")}) == 798);
    CHECK(res.plan.additions.size() == 1);
    CHECK_FALSE(smart_allocate(d, make(d, {"E", "N", "M"}, "LLW"), 797, cfg).feasible);
}

TEST_CASE("current structure costs nothing") {
    const auto d = fixtures::district();
    const auto cfg = fixtures::district_config(d);
    for (std::int64_t B : {0, 5, 300}) {
        const auto res = smart_allocate(d, make(d, {"M", "E", "N"}, "LWW"), B, cfg);
        REQUIRE(res.feasible);
        CHECK(res.votes_used == 0);
        CHECK(res.plan.additions.empty());
    }
    const auto plan = optimize_budget(d, make(d, {"M", "E", "N"}, "LWW"), 0, cfg);
    REQUIRE(plan);
    CHECK(plan->cost() == 0);
}

TEST_CASE("self-votes for the district runner-up") {
    const auto d = fixtures::district();
    const auto cfg = fixtures::district_config(d);
    const auto res = smart_allocate(d, make(d, {"E", "M", "N"}, "LLW"), 2192, cfg);
    REQUIRE(res.feasible);
    CHECK(res.plan.additions.at(Ranking{d.at("E")}) == 2192);
}

TEST_CASE("cheapest route to first place") {
    const auto d = fixtures::district();
    const auto cfg = fixtures::district_config(d);
    std::int64_t best = -1;
    for (const auto& seq : enumerate_feasible_sequences(3, 1))
        for (auto order : {std::vector<std::string>{"E", "N", "M"}, std::vector<std::string>{"E", "M", "N"}}) {
            const auto plan = optimize_budget(d, make(d, order, seq.str()), 3000, cfg);
            if (plan && (best < 0 || plan->cost() < best)) best = plan->cost();
        }
    CHECK(best == 798);
}

TEST_CASE("allocations replay, leave no slack and use whole ballots") {
    oracle::Rng rng(101);
    int feasible = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform(2, 5));
        const auto b = oracle::random_instance(rng, n, 6, 30);
        const auto cfg = oracle::random_config(rng, n, 2);
        std::vector<Cand> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = cand(i);
        std::shuffle(order.begin(), order.end(), rng.gen);
        const auto seqs = enumerate_feasible_sequences(n, static_cast<std::size_t>(cfg.seats));
        const Structure target{order, seqs[static_cast<std::size_t>(rng.uniform(0, static_cast<int>(seqs.size()) - 1))]};
        const std::int64_t B = rng.uniform(0, 40);
        const auto res = smart_allocate(b, target, B, cfg);
        if (!res.feasible) continue;
        ++feasible;
        REQUIRE(res.votes_used <= B);
        REQUIRE(res.plan.cost() == B);
        const auto merged = merge_plan(b, res.plan);
        REQUIRE(structure_of(run_election(merged, cfg)) == target);
        REQUIRE(unmet_slacks(merged, target, cfg).empty());
        for (const auto& [r, count] : res.plan.additions) REQUIRE_FALSE(r.empty());
    }
    CHECK(feasible > 50);
}

TEST_CASE("optimized cost matches exhaustive search on small instances") {
    oracle::Rng rng(202);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform(2, 3));
        const auto b = oracle::random_instance(rng, n, 6, 30);
        const auto cfg = oracle::random_config(rng, n, 2);
        const int M = rng.uniform(0, 4);
        const auto best = oracle::min_cost_by_structure(b, cfg, M);
        std::vector<Cand> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = cand(i);
        do {
            for (const auto& seq : enumerate_all_sequences(n)) {
                const Structure s{order, seq};
                const auto plan = optimize_budget(b, s, M, cfg);
                const auto it = best.find(s);
                if (it == best.end()) {
                    REQUIRE_FALSE(plan.has_value());
                } else {
                    REQUIRE(plan.has_value());
                    REQUIRE(plan->cost() == it->second);
                }
            }
        } while (std::next_permutation(order.begin(), order.end()));
    }
}

TEST_CASE("cost never rises with a larger cap") {
    oracle::Rng rng(303);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform(3, 4));
        const auto b = oracle::random_instance(rng, n, 6, 30);
        const auto cfg = oracle::random_config(rng, n, 2);
        std::vector<Cand> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = cand(i);
        std::shuffle(order.begin(), order.end(), rng.gen);
        const Structure s{order, enumerate_feasible_sequences(n, 1).back()};
        const auto a = optimize_budget(b, s, 10, cfg);
        const auto c = optimize_budget(b, s, 30, cfg);
        if (a) {
            REQUIRE(c.has_value());
            REQUIRE(c->cost() <= a->cost());
        }
    }
}

TEST_CASE("bad input") {
    const auto d = fixtures::district();
    CHECK_THROWS_AS(smart_allocate(d, make(d, {"E", "M", "N"}, "LLW"), -1, ElectionConfig{}), DataError);
    CHECK_THROWS_AS(optimize_budget(d, make(d, {"E", "M", "N"}, "LLW"), -1, ElectionConfig{}), DataError);
    CHECK_THROWS_AS(smart_allocate(d, Structure{{d.at("E")}, Sequence::parse("W")}, 1, ElectionConfig{}), DataError);
}
