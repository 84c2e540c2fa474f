#include "doctest.h"
#include "support.hpp"

#include "stvopt/cli_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stvopt;

namespace {

const std::string kData = STVOPT_TEST_DATA;
const std::string kDistrict = kData + "/district.csv";
const std::string kDistrictCfg = kData + "/district.cfg";

BallotData parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_ballots(in, "test.csv");
}

RunConfig config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_run_config(in, "test.cfg");
}

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

struct Run {
    int status = -1;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "stvopt");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.status = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("stvopt_cli_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

// Same candidates by id and the same weight on every ranking, also by id.
std::map<std::vector<std::string>, Rational> by_ids(const WeightedBallotSet& b) {
    std::map<std::vector<std::string>, Rational> out;
    for (const auto& [r, w] : b.entries()) {
        std::vector<std::string> ids;
        for (Cand c : r) ids.push_back(b.candidate(c).id);
        out[ids] += w;
    }
    return out;
}

}  // namespace

TEST_CASE("district ballot file gives the first-round totals") {
    const auto data = parse_ballots_file(kDistrict);
    CHECK(data.ballots.candidate_count() == 3);
    CHECK(data.ballots.total_weight() == 36626);
    const auto first = [&](const char* id) {
        const Ranking p{data.ballots.at(id)};
        return aggregate_count(data.ballots, p);
    };
    CHECK(first("E") == 14119);
    CHECK(first("M") == 11652);
    CHECK(first("N") == 10855);
    CHECK(by_ids(data.ballots) == by_ids(fixtures::district()));
    CHECK(data.respondents.size() == 9);
    CHECK(data.respondents.records()[2].id == "E");
    CHECK(data.respondents.records()[2].weight == 5566);
}

TEST_CASE("malformed ballot files are rejected with line numbers") {
    CHECK(error_of([] { parse_text(""); }).find("empty") != std::string::npos);
    CHECK(error_of([] { parse_text("\n\n"); }).find("empty") != std::string::npos);
    CHECK(error_of([] { parse_text("respondent_id,weight,rank1\n"); }).find("no ballot rows") != std::string::npos);
    CHECK(error_of([] { parse_text("id,weight,rank1\na,1,X\n"); }).find("test.csv:1:") != std::string::npos);
    CHECK(error_of([] { parse_text("respondent_id,weight,rank2\na,1,X\n"); }).find("rank1") != std::string::npos);
    CHECK(error_of([] { parse_text("respondent_id,weight\na,1\n"); }) != "");
    const std::string head = "respondent_id,weight,rank1,rank2,rank3\n";
    CHECK(error_of([&] { parse_text(head + "a,1,X,Y\nb,1,X,,Y\n"); }).find("test.csv:3:") != std::string::npos);
    CHECK(error_of([&] { parse_text(head + "a,1,X,Y,X\n"); }).find("ranked twice") != std::string::npos);
    CHECK(error_of([&] { parse_text(head + "a,1,X\nb,-1,X\n"); }).find("test.csv:3:") != std::string::npos);
    CHECK(error_of([&] { parse_text(head + "a,1e3,X\n"); }).find("invalid weight") != std::string::npos);
    CHECK(error_of([&] { parse_text(head + "a,1/0,X\n"); }).find("zero denominator") != std::string::npos);
    CHECK(error_of([&] { parse_text(head + "a,1,X,Y,Z,W\n"); }).find("test.csv:2:") != std::string::npos);
    CHECK(error_of([] { parse_ballots_file(kData + "/missing.csv"); }).find("cannot open") != std::string::npos);
}

TEST_CASE("ballot rows: defaults, quoting, blank lines, candidate order") {
    const auto d = parse_text("respondent_id,weight,rank1,rank2\r\n"
                              ",,B,A\r\n"
                              "\r\n"
                              "\"x,1\",0.5,\"C\",\n"
                              "z,2,A\n");
    REQUIRE(d.respondents.size() == 3);
    CHECK(d.respondents.records()[0].id == "r1");
    CHECK(d.respondents.records()[0].weight == 1);
    CHECK(d.respondents.records()[1].id == "x,1");
    CHECK(d.respondents.records()[1].weight == Rational(1, 2));
    CHECK(d.ballots.candidates()[0].id == "B");
    CHECK(d.ballots.candidates()[1].id == "A");
    CHECK(d.ballots.candidates()[2].id == "C");
    CHECK(d.ballots.total_weight() == Rational(7, 2));
    // a zero-weight respondent stays a record but adds nothing
    const auto z = parse_text("respondent_id,weight,rank1\na,0,A\nb,1,B\n");
    CHECK(z.respondents.size() == 2);
    CHECK(z.ballots.total_weight() == 1);
}

TEST_CASE("weights are exact rationals") {
    CHECK(parse_weight("3") == 3);
    CHECK(parse_weight("0.1") == Rational(1, 10));
    CHECK(parse_weight(".25") == Rational(1, 4));
    CHECK(parse_weight("2.") == 2);
    CHECK(parse_weight("7/3") == Rational(7, 3));
    CHECK(parse_weight("4/6") == Rational(2, 3));
    CHECK(parse_weight("1.3350") == Rational(267, 200));
    for (const char* bad : {"", ".", "-1", "1/", "/2", "1.2.3", "abc", "1e2", "0x10"})
        CHECK_THROWS_AS(parse_weight(bad), DataError);

    // 400 respondents at 1.335 and 400 at 0.6675 sum to exactly 801, which doubles would miss
    std::string text = "respondent_id,weight,rank1,rank2\n";
    for (int i = 0; i < 800; ++i)
        text += "p" + std::to_string(i) + "," + (i % 2 ? "0.6675" : "1.335") + "," + (i % 3 ? "A,B" : "B") + "\n";
    const auto poll = parse_text(text);
    CHECK(poll.ballots.total_weight() == 801);
    CHECK(poll.respondents.size() == 800);
    double approx = 0;
    for (int i = 0; i < 800; ++i) approx += i % 2 ? 0.6675 : 1.335;
    CHECK(approx != 801.0);
}

TEST_CASE("emit then parse returns the same ballots") {
    const auto district = parse_ballots_file(kDistrict);
    const auto again = parse_text(emit_ballots(district.respondents));
    CHECK(again.ballots == district.ballots);
    REQUIRE(again.respondents.size() == district.respondents.size());
    for (std::size_t i = 0; i < again.respondents.size(); ++i) {
        CHECK(again.respondents.records()[i].id == district.respondents.records()[i].id);
        CHECK(again.respondents.records()[i].weight == district.respondents.records()[i].weight);
    }
    CHECK(emit_ballots(again.respondents) == emit_ballots(district.respondents));

    // random respondent sets with decimal and repeating weights
    oracle::Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform(1, 6));
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) ids.push_back("C" + std::to_string(i) + (i % 2 ? "x" : ""));
        const auto shell = WeightedBallotSet::with_ids(ids);
        RespondentSet people(shell.candidates());
        const int rows = rng.uniform(1, 12);
        for (int r = 0; r < rows; ++r) {
            const Rational w(rng.uniform(0, 50), rng.uniform(1, 12));
            people.add({"id" + std::to_string(r), oracle::random_ranking(rng, n), w});
        }
        const auto back = parse_text(emit_ballots(people));
        CHECK(by_ids(back.ballots) == by_ids(people.ballots()));
        REQUIRE(back.respondents.size() == people.size());
        for (std::size_t i = 0; i < people.size(); ++i) {
            const auto& a = people.records()[i];
            const auto& b = back.respondents.records()[i];
            CHECK(a.id == b.id);
            CHECK(a.weight == b.weight);
            CHECK(people.candidates().format(a.ranking) == back.ballots.format(b.ranking));
        }
    }

    // a bare ballot set writes one row per ranking
    const auto from_set = parse_text(emit_ballots(fixtures::two_seat()));
    CHECK(by_ids(from_set.ballots) == by_ids(fixtures::two_seat()));
}

TEST_CASE("run configuration") {
    const auto cfg = config_text("# district\nseats = 1\ntie_break = M, E ,N\nquota_override = 18314\n"
                                 "budget = 5%\nsamples = 200\nseed = 18446744073709551615\n");
    CHECK(cfg.seats == 1);
    CHECK(cfg.tie_break == std::vector<std::string>{"M", "E", "N"});
    CHECK(cfg.quota_override == Rational(18314));
    CHECK(cfg.budget == "5%");
    CHECK(cfg.samples == 200);
    CHECK(cfg.seed == 18446744073709551615ull);

    CHECK(error_of([] { config_text("seats = 1\nwinners = 2\n"); }).find("test.cfg:2: unknown key 'winners'") !=
          std::string::npos);
    CHECK(error_of([] { config_text("seats = 1\nseats = 2\n"); }).find("duplicate") != std::string::npos);
    CHECK(error_of([] { config_text("seats = two\n"); }).find("integer") != std::string::npos);
    CHECK(error_of([] { config_text("seats = 0\n"); }) != "");
    CHECK(error_of([] { config_text("budget = lots\n"); }).find("invalid budget") != std::string::npos);
    CHECK(error_of([] { config_text("tie_break = A,,B\n"); }).find("blank") != std::string::npos);
    CHECK(error_of([] { config_text("just words\n"); }).find("key = value") != std::string::npos);

    const auto d = fixtures::district();
    const auto ec = election_config(cfg, d);
    CHECK(ec.tie_break == std::vector<Cand>{d.at("M"), d.at("E"), d.at("N")});
    CHECK(error_of([&] { election_config(config_text("tie_break = M,E\n"), d); }).find("'N'") != std::string::npos);
    CHECK(error_of([&] { election_config(config_text("tie_break = M,E,N,Q\n"), d); }).find("'Q'") != std::string::npos);
    CHECK(error_of([&] { election_config(config_text("tie_break = M,E,E\n"), d); }) != "");
    CHECK(error_of([&] { election_config(config_text("seats = 3\n"), d); }).find("fewer") != std::string::npos);
}

TEST_CASE("budgets in votes or percent") {
    CHECK(parse_budget("40", 800) == 40);
    CHECK(parse_budget("5%", 800) == 40);
    CHECK(parse_budget("5%", 36626) == 1832);  // 1831.3 rounds up
    CHECK(parse_budget("2.5%", Rational(801)) == 21);
    CHECK(parse_budget("0%", 800) == 0);
    CHECK(parse_budget(" 7 ", 800) == 7);
    for (const char* bad : {"", "%", "-5", "4.5", "5%%", "x%"}) CHECK_THROWS_AS(parse_budget(bad, 800), DataError);
}

TEST_CASE("tally subcommand") {
    const auto r = run({"tally", "--ballots", kDistrict, "--seats", "1"});
    CHECK(r.status == 0);
    CHECK(r.out.find("N eliminated, margin 797") != std::string::npos);
    CHECK(r.out.find("M wins with 18561") != std::string::npos);
    CHECK(r.out.find("E          16370   +2251") != std::string::npos);
    CHECK(r.out.find("Order    M>E>N") != std::string::npos);
    const auto j = run({"tally", "--ballots", kDistrict, "--json"});
    CHECK(j.out.find("\"quota\": \"18314\"") != std::string::npos);
    CHECK(j.out.find("\"M\": \"18561\"") != std::string::npos);
}

TEST_CASE("constraints and reduce subcommands") {
    const auto c = run({"constraints", "--ballots", kDistrict, "--config", kDistrictCfg, "--order", "M,E,N",
                        "--sequence", "LWW"});
    CHECK(c.status == 0);
    CHECK(c.out.find("Round 1 (N eliminated)") != std::string::npos);
    CHECK(c.out.find("Holds on these ballots: yes") != std::string::npos);
    const auto other = run({"constraints", "--ballots", kDistrict, "--order", "E,M,N", "--sequence", "LWW"});
    CHECK(other.out.find("Holds on these ballots: no") != std::string::npos);
    CHECK(run({"constraints", "--ballots", kDistrict, "--order", "E,M", "--sequence", "LWW"}).status == 1);

    const auto dir = scratch_dir("reduce");
    const auto r = run({"reduce", "--ballots", kDistrict, "--max-budget", "500", "--out-dir", dir.string()});
    CHECK(r.status == 0);
    CHECK(r.out.find("Removed 0 of 3") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "reduce.json"));
    CHECK(slurp(dir / "reduced_ballots.csv").rfind("respondent_id,weight,rank1,rank2,rank3\n", 0) == 0);
}

TEST_CASE("strategize subcommand") {
    const auto r = run({"strategize", "--ballots", kDistrict, "--config", kDistrictCfg, "--subject", "E", "--goal",
                        "top1", "--max-budget", "3000"});
    CHECK(r.status == 0);
    CHECK(r.out.find("798 x [N]") != std::string::npos);
    CHECK(r.out.find("Categories AltruisticToLosers") != std::string::npos);
    const auto self = run({"strategize", "--ballots", kDistrict, "--config", kDistrictCfg, "--subject", "E", "--goal",
                           "win-self", "--json"});
    CHECK(self.status == 0);
    CHECK(self.out.find("\"cost\": 2192") != std::string::npos);

    const auto short_budget = run({"strategize", "--ballots", kDistrict, "--config", kDistrictCfg, "--subject", "E",
                                   "--goal", "top1", "--max-budget", "797"});
    CHECK(short_budget.status == 2);
    CHECK(short_budget.err.find("infeasible") != std::string::npos);
    CHECK(run({"strategize", "--ballots", kDistrict, "--subject", "E", "--goal", "first"}).status == 1);
    CHECK(run({"strategize", "--ballots", kDistrict, "--subject", "Z"}).status == 1);
}

TEST_CASE("usage errors and help") {
    CHECK(run({}).status == 1);
    CHECK(run({"--help"}).status == 0);
    CHECK(run({"tally", "--help"}).status == 0);
    CHECK(run({"tally"}).status == 1);
    CHECK(run({"tally", "--ballots", kDistrict, "--seats", "x"}).status == 1);
    CHECK(run({"tally", "--ballots", kDistrict, "--frobnicate"}).status == 1);
    CHECK(run({"tally", "--ballots", kDistrict, "--config", kData + "/missing.cfg"}).status == 1);
    CHECK(run({"tally", "--ballots", kDistrict, "--seats", "3"}).status == 1);
}

TEST_CASE("bootstrap twice gives byte-identical outputs") {
    const auto a = scratch_dir("boot_a"), b = scratch_dir("boot_b");
    const auto ra = run({"bootstrap", "--ballots", kDistrict, "--config", kDistrictCfg, "--samples", "10", "--seed", "7",
                         "--budget", "0", "--out-dir", a.string()});
    const auto rb = run({"bootstrap", "--ballots", kDistrict, "--config", kDistrictCfg, "--samples", "10", "--seed", "7",
                         "--budget", "0", "--out-dir", b.string(), "--threads", "1"});
    CHECK(ra.status == 0);
    CHECK(rb.status == 0);
    CHECK(ra.out == rb.out);
    for (const char* f :
         {"bootstrap.json", "bootstrap.txt", "efficacy.csv", "per_sample.csv", "distribution.csv", "samples.csv"}) {
        CAPTURE(f);
        CHECK(std::filesystem::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(slurp(a / "efficacy.csv").rfind("strategy_for,plan,cost,E,M,N\n", 0) == 0);
    const auto other = run({"bootstrap", "--ballots", kDistrict, "--samples", "10", "--seed", "8", "--budget", "0"});
    CHECK(other.status == 0);
}
