#pragma once

#include "stvopt/core_model.hpp"
#include "stvopt/robustness.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stvopt {

// Header of a ballot file is exactly respondent_id,weight,rank1,...,rankR.
struct BallotData {
    WeightedBallotSet ballots;
    RespondentSet respondents;
};

// "3", "0.25", ".5" or "7/3"; no sign, no exponent.
Rational parse_weight(std::string_view text);

// Candidates are registered in order of first appearance. `source` prefixes error messages.
BallotData parse_ballots(std::istream& in, const std::string& source = "<ballots>");
BallotData parse_ballots_file(const std::filesystem::path& path);

// One row per respondent, or per ballot type for a bare ballot set.
std::string emit_ballots(const RespondentSet& respondents);
std::string emit_ballots(const WeightedBallotSet& ballots);

// key = value lines; '#' starts a comment.
struct RunConfig {
    std::optional<int> seats;
    std::vector<std::string> tie_break;
    std::optional<Rational> quota_override;
    std::optional<std::string> budget;
    std::optional<int> samples;
    std::optional<std::uint64_t> seed;
};

RunConfig parse_run_config(std::istream& in, const std::string& source = "<config>");
RunConfig parse_run_config_file(const std::filesystem::path& path);

// Resolves ids against the ballots; the tie-break list must name every candidate exactly once.
ElectionConfig election_config(const RunConfig& run, const WeightedBallotSet& ballots);

// "40" or "5%"; a percentage becomes ceil(percent / 100 * total_weight) votes.
std::int64_t parse_budget(std::string_view text, const Rational& total_weight);

// Exit status: 0 success, 1 usage or data error, 2 infeasible goal.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stvopt
