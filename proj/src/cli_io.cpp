#include "stvopt/cli_io.hpp"

#include "stvopt/instance_reducer.hpp"
#include "stvopt/robustness.hpp"
#include "stvopt/strategy_optimizer.hpp"
#include "stvopt/structure_space.hpp"
#include "stvopt/stv_engine.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace stvopt {

namespace {

using Json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void fail_at(const std::string& source, std::size_t line, const std::string& what) {
    throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

// One CSV record; double quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_csv(std::string_view line, const std::string& source, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false, was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"' && trim(cur).empty() && !was_quoted) {
            cur.clear();
            quoted = was_quoted = true;
        } else if (ch == ',') {
            fields.push_back(was_quoted ? cur : std::string(trim(cur)));
            cur.clear();
            was_quoted = false;
        } else {
            cur += ch;
        }
    }
    if (quoted) fail_at(source, line_no, "unterminated quoted field");
    fields.push_back(was_quoted ? cur : std::string(trim(cur)));
    return fields;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos && trim(s) == s) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

Rational parse_weight(std::string_view text) {
    const std::string_view t = trim(text);
    const auto bad = [&]() -> DataError { return DataError("invalid weight '" + std::string(text) + "'"); };
    if (t.empty()) throw bad();
    if (const auto slash = t.find('/'); slash != std::string_view::npos) {
        const auto num = t.substr(0, slash), den = t.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) throw bad();
        const mpz_class d{std::string(den), 10};
        if (d == 0) throw DataError("weight '" + std::string(text) + "' has a zero denominator");
        Rational q{mpz_class{std::string(num), 10}, d};
        q.canonicalize();
        return q;
    }
    const auto dot = t.find('.');
    const auto whole = t.substr(0, dot);
    const auto frac = dot == std::string_view::npos ? std::string_view{} : t.substr(dot + 1);
    if (whole.empty() && frac.empty()) throw bad();
    if ((!whole.empty() && !all_digits(whole)) || (dot != std::string_view::npos && !frac.empty() && !all_digits(frac)))
        throw bad();
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
    const mpz_class digits(std::string(whole.empty() ? "0" : whole) + std::string(frac), 10);
    Rational q(digits, scale);
    q.canonicalize();
    return q;
}

BallotData parse_ballots(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        header = split_csv(line, source, line_no);
        break;
    }
    if (header.empty()) throw DataError(source + ": empty ballot file");
    const std::size_t header_line = line_no;
    if (header.size() < 3 || header[0] != "respondent_id" || header[1] != "weight")
        fail_at(source, header_line, "header must be respondent_id,weight,rank1,...");
    for (std::size_t i = 2; i < header.size(); ++i)
        if (header[i] != "rank" + std::to_string(i - 1))
            fail_at(source, header_line, "expected column 'rank" + std::to_string(i - 1) + "', found '" + header[i] + "'");

    struct Row {
        std::string id;
        std::vector<std::string> ranking;
        Rational weight;
    };
    std::vector<Row> rows;
    std::vector<std::string> order;  // candidates by first appearance
    std::map<std::string, std::size_t, std::less<>> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split_csv(line, source, line_no);
        if (fields.size() > header.size())
            fail_at(source, line_no, std::to_string(fields.size()) + " fields, header has " + std::to_string(header.size()));
        fields.resize(header.size());
        Row row;
        row.id = fields[0].empty() ? "r" + std::to_string(rows.size() + 1) : fields[0];
        try {
            row.weight = fields[1].empty() ? Rational(1) : parse_weight(fields[1]);
        } catch (const DataError& e) {
            fail_at(source, line_no, e.what());
        }
        bool ended = false;
        for (std::size_t i = 2; i < fields.size(); ++i) {
            if (fields[i].empty()) {
                ended = true;
                continue;
            }
            if (ended) fail_at(source, line_no, "rank" + std::to_string(i - 1) + " follows a blank rank");
            if (std::find(row.ranking.begin(), row.ranking.end(), fields[i]) != row.ranking.end())
                fail_at(source, line_no, "candidate '" + fields[i] + "' ranked twice");
            if (seen.emplace(fields[i], order.size()).second) order.push_back(fields[i]);
            row.ranking.push_back(fields[i]);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(source + ": no ballot rows");

    const auto shell = WeightedBallotSet::with_ids(order);
    BallotData data{shell, RespondentSet(shell.candidates())};
    for (auto& row : rows) {
        Ranking r = shell.parse_ranking(row.ranking);
        data.ballots.add(r, row.weight);
        data.respondents.add({std::move(row.id), std::move(r), std::move(row.weight)});
    }
    return data;
}

BallotData parse_ballots_file(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    return parse_ballots(in, path.string());
}

namespace {

std::string emit_rows(const WeightedBallotSet& names,
                      const std::vector<std::tuple<std::string, const Ranking*, Rational>>& rows) {
    std::size_t width = 1;
    for (const auto& [id, r, w] : rows) width = std::max(width, r->size());
    std::string out = "respondent_id,weight";
    for (std::size_t i = 1; i <= width; ++i) out += ",rank" + std::to_string(i);
    out += "\n";
    for (const auto& [id, r, w] : rows) {
        out += csv_field(id) + "," + rational_to_string(w);
        for (std::size_t i = 0; i < width; ++i) out += "," + (i < r->size() ? csv_field(names.candidate((*r)[i]).id) : "");
        out += "\n";
    }
    return out;
}

}  // namespace

std::string emit_ballots(const RespondentSet& respondents) {
    std::vector<std::tuple<std::string, const Ranking*, Rational>> rows;
    for (const auto& r : respondents.records()) rows.emplace_back(r.id, &r.ranking, r.weight);
    return emit_rows(respondents.candidates(), rows);
}

std::string emit_ballots(const WeightedBallotSet& ballots) {
    std::vector<std::tuple<std::string, const Ranking*, Rational>> rows;
    std::size_t i = 0;
    for (const auto& [r, w] : ballots.entries()) rows.emplace_back("b" + std::to_string(++i), &r, w);
    return emit_rows(ballots, rows);
}

RunConfig parse_run_config(std::istream& in, const std::string& source) {
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> given;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) fail_at(source, line_no, "expected key = value");
        const std::string key(trim(text.substr(0, eq)));
        const std::string value(trim(text.substr(eq + 1)));
        if (!given.emplace(key, line_no).second) fail_at(source, line_no, "duplicate key '" + key + "'");
        if (value.empty()) fail_at(source, line_no, "empty value for '" + key + "'");
        const auto as_int = [&](auto& out) {
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
            if (ec != std::errc{} || p != value.data() + value.size())
                fail_at(source, line_no, "'" + key + "' expects an integer, got '" + value + "'");
        };
        if (key == "seats") {
            int v = 0;
            as_int(v);
            if (v < 1) fail_at(source, line_no, "seats must be at least 1");
            cfg.seats = v;
        } else if (key == "tie_break") {
            std::string item;
            std::istringstream items(value);
            while (std::getline(items, item, ',')) {
                const std::string id(trim(item));
                if (id.empty()) fail_at(source, line_no, "blank entry in tie_break");
                cfg.tie_break.push_back(id);
            }
        } else if (key == "quota_override") {
            try {
                cfg.quota_override = parse_weight(value);
            } catch (const DataError& e) {
                fail_at(source, line_no, e.what());
            }
            if (sgn(*cfg.quota_override) <= 0) fail_at(source, line_no, "quota_override must be positive");
        } else if (key == "budget") {
            try {
                parse_budget(value, Rational(0));
            } catch (const DataError& e) {
                fail_at(source, line_no, e.what());
            }
            cfg.budget = value;
        } else if (key == "samples") {
            int v = 0;
            as_int(v);
            if (v < 1) fail_at(source, line_no, "samples must be at least 1");
            cfg.samples = v;
        } else if (key == "seed") {
            std::uint64_t v = 0;
            as_int(v);
            cfg.seed = v;
        } else {
            fail_at(source, line_no, "unknown key '" + key + "'");
        }
    }
    return cfg;
}

RunConfig parse_run_config_file(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    return parse_run_config(in, path.string());
}

ElectionConfig election_config(const RunConfig& run, const WeightedBallotSet& ballots) {
    ElectionConfig cfg;
    if (run.seats) cfg.seats = *run.seats;
    cfg.quota_override = run.quota_override;
    if (!run.tie_break.empty()) {
        for (const auto& id : run.tie_break) {
            const auto c = ballots.find(id);
            if (!c) throw DataError("tie_break names '" + id + "', which no ballot ranks");
            cfg.tie_break.push_back(*c);
        }
        if (cfg.tie_break.size() != ballots.candidate_count()) {
            for (const auto& c : ballots.candidates())
                if (std::find(run.tie_break.begin(), run.tie_break.end(), c.id) == run.tie_break.end())
                    throw DataError("tie_break does not list candidate '" + c.id + "'");
        }
    }
    cfg.validate(ballots.candidate_count());
    if (static_cast<std::size_t>(cfg.seats) >= std::max<std::size_t>(ballots.candidate_count(), 1))
        throw DataError("seats must be fewer than the " + std::to_string(ballots.candidate_count()) + " candidates");
    return cfg;
}

std::int64_t parse_budget(std::string_view text, const Rational& total_weight) {
    const std::string_view t = trim(text);
    const bool percent = !t.empty() && t.back() == '%';
    const auto body = percent ? trim(t.substr(0, t.size() - 1)) : t;
    Rational v;
    try {
        if (!percent && !all_digits(body)) throw DataError("");
        v = parse_weight(body);
    } catch (const DataError&) {
        throw DataError("invalid budget '" + std::string(text) + "' (expected N or P%)");
    }
    if (percent) v = ceil_of(v / 100 * total_weight);
    if (!v.get_num().fits_slong_p()) throw DataError("budget '" + std::string(text) + "' is too large");
    return v.get_num().get_si();
}

namespace {

// ---- dispatch ----

struct Flags {
    std::string ballots, config, out_dir;
    std::optional<int> seats;
    std::optional<std::string> quota, goal, budget;
    std::string subject, order, sequence;
    std::optional<int> samples;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    bool aggressive = false, json = false;
};

struct Context {
    BallotData data;
    RunConfig run;
    ElectionConfig config;
};

Context load(const Flags& f) {
    Context ctx{parse_ballots_file(f.ballots), {}, {}};
    if (!f.config.empty()) ctx.run = parse_run_config_file(f.config);
    if (f.seats) ctx.run.seats = *f.seats;
    if (f.quota) ctx.run.quota_override = parse_weight(*f.quota);
    ctx.config = election_config(ctx.run, ctx.data.ballots);
    return ctx;
}

std::int64_t budget_of(const Flags& f, const Context& ctx, std::int64_t fallback) {
    const Rational total = ctx.data.ballots.total_weight();
    if (f.budget) return parse_budget(*f.budget, total);
    if (ctx.run.budget) return parse_budget(*ctx.run.budget, total);
    return fallback;
}

const std::string& id_of(const WeightedBallotSet& b, Cand c) { return b.candidate(c).id; }

Json ids_json(const std::vector<Cand>& cs, const WeightedBallotSet& b) {
    Json a = Json::array();
    for (Cand c : cs) a.push_back(id_of(b, c));
    return a;
}

Json ranking_json(const Ranking& r, const WeightedBallotSet& b) { return ids_json(r, b); }

Json structure_json(const Structure& s, const WeightedBallotSet& b) {
    return Json{{"order", ids_json(s.order, b)}, {"sequence", s.sequence.str()}};
}

std::string structure_text(const Structure& s, const WeightedBallotSet& b) {
    return format_order(s.order, b) + " / " + s.sequence.str();
}

// Left column padded to the widest label, right column right-aligned.
std::string table(const std::vector<std::vector<std::string>>& rows, const std::string& indent = "  ") {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        width.resize(std::max(width.size(), r.size()), 0);
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::string out;
    for (const auto& r : rows) {
        std::string line = indent;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const std::string pad(width[i] - r[i].size(), ' ');
            line += i == 0 ? r[i] + pad : "  " + pad + r[i];
        }
        out += line.substr(0, line.find_last_not_of(' ') + 1) + "\n";
    }
    return out;
}

void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& content) {
    std::filesystem::create_directories(dir);
    std::ofstream o(dir / name, std::ios::binary);
    if (!o) throw DataError("cannot write '" + (dir / name).string() + "'");
    o << content;
}

struct Report {
    std::string text;
    Json json;
    std::vector<std::pair<std::string, std::string>> files;  // extra CSVs for --out-dir
};

void emit(const Flags& f, const std::string& name, const Report& r, std::ostream& out) {
    const std::string json = r.json.dump(2) + "\n";
    out << (f.json ? json : r.text);
    if (f.out_dir.empty()) return;
    write_file(f.out_dir, name + ".json", json);
    write_file(f.out_dir, name + ".txt", r.text);
    for (const auto& [file, content] : r.files) write_file(f.out_dir, file, content);
}

// Exact value, with a rounded reading when it is a repeating fraction.
std::string readable(const Rational& q) {
    const std::string exact = rational_to_string(q);
    return exact.find('/') == std::string::npos ? exact : exact + " (~" + fixed(q.get_d(), 2) + ")";
}

std::string signed_text(const Rational& q) { return (sgn(q) > 0 ? "+" : "") + readable(q); }

Report tally_report(const Context& ctx) {
    const auto& b = ctx.data.ballots;
    const ElectionOutcome out = run_election(b, ctx.config);
    Report r;
    r.text = "Candidates " + std::to_string(b.candidate_count()) + ", seats " + std::to_string(ctx.config.seats) +
             ", total weight " + rational_to_string(b.total_weight()) + ", quota " +
             rational_to_string(out.quota.value) + "\n";
    Json rounds = Json::array();
    const RoundOutcome* prev = nullptr;
    for (const auto& round : out.rounds) {
        std::vector<std::vector<std::string>> rows{{"candidate", "tally", "change"}};
        Json tallies = Json::object(), changes = Json::object();
        for (const auto& [c, t] : round.tallies_before) {
            std::string change;
            if (prev && prev->was_active(c)) {
                const Rational d = t - prev->tally_of(c);
                change = signed_text(d);
                changes[id_of(b, c)] = rational_to_string(d);
            }
            rows.push_back({id_of(b, c), readable(t), change});
            tallies[id_of(b, c)] = rational_to_string(t);
        }
        rows.push_back({"exhausted", readable(round.exhausted_before),
                        prev ? signed_text(round.exhausted_before - prev->exhausted_before) : ""});
        if (sgn(round.retired_before) != 0)
            rows.push_back({"kept by winners", readable(round.retired_before),
                            prev ? signed_text(round.retired_before - prev->retired_before) : ""});
        const std::string who = id_of(b, round.resolved);
        std::string verdict;
        switch (round.kind) {
            case RoundKind::QuotaWin:
                verdict = who + " wins with " + rational_to_string(round.tally_of(round.resolved)) + ", margin " +
                          rational_to_string(round.margin) + ", surplus fraction " +
                          rational_to_string(round.surplus_fraction.value_or(Rational(0)));
                break;
            case RoundKind::Elimination:
                verdict = who + " eliminated, margin " + rational_to_string(round.margin);
                break;
            case RoundKind::FinalPlacement:
                verdict = who + " placed in the final round";
                break;
        }
        r.text += "\nRound " + std::to_string(round.round_index) + "\n" + table(rows) + "  -> " + verdict + "\n";
        Json jr{{"round", round.round_index},
                {"resolved", who},
                {"kind", std::string(to_string(round.kind))},
                {"tallies", tallies},
                {"changes", changes},
                {"exhausted", rational_to_string(round.exhausted_before)},
                {"kept_by_winners", rational_to_string(round.retired_before)},
                {"margin", rational_to_string(round.margin)}};
        jr["surplus_fraction"] = round.surplus_fraction ? Json(rational_to_string(*round.surplus_fraction)) : Json();
        rounds.push_back(std::move(jr));
        prev = &round;
    }
    const Structure s = structure_of(out);
    r.text += "\nOrder    " + format_order(out.order, b) + "\nSequence " + s.sequence.str() + "\nWinners  " +
              format_order(out.winners, b) + "\n";
    r.json = Json{{"candidates", ids_json([&] {
                       std::vector<Cand> all;
                       for (std::size_t i = 0; i < b.candidate_count(); ++i) all.push_back(cand(i));
                       return all;
                   }(), b)},
                  {"seats", ctx.config.seats},
                  {"total_weight", rational_to_string(b.total_weight())},
                  {"quota", rational_to_string(out.quota.value)},
                  {"rounds", rounds},
                  {"structure", structure_json(s, b)},
                  {"winners", ids_json(out.winners, b)}};
    return r;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    const char sep = text.find(',') != std::string::npos ? ',' : '>';
    while (std::getline(in, item, sep)) out.emplace_back(trim(item));
    return out;
}

Report constraints_report(const Context& ctx, const Flags& f) {
    const auto& b = ctx.data.ballots;
    Structure s;
    for (const auto& id : split_list(f.order)) s.order.push_back(b.at(id));
    s.sequence = Sequence::parse(f.sequence);
    if (!s.well_formed(b.candidate_count()))
        throw DataError("order " + f.order + " with sequence " + f.sequence + " is not a structure over the " +
                        std::to_string(b.candidate_count()) + " candidates");
    const Quota q = compute_quota(b, ctx.config);
    const ConstraintSet set = generate_constraints(s, q);
    const bool holds = evaluate_constraints(set, b, ctx.config, q);
    Report r;
    r.text = "Structure " + structure_text(s, b) + ", quota " + rational_to_string(q.value) + "\n" +
             format_constraints(set, b) + "Holds on these ballots: " + (holds ? "yes" : "no") + "\n";
    Json groups = Json::array();
    for (const auto& g : set.groups) {
        if (g.tallies.empty()) continue;
        Json tallies = Json::object();
        for (const auto& t : g.tallies) tallies[id_of(b, t.candidate)] = format_tally(t, set, b);
        groups.push_back(Json{{"round", g.round},
                              {"resolved", id_of(b, g.resolved)},
                              {"label", std::string(1, static_cast<char>(g.label))},
                              {"tallies", tallies},
                              {"constraint", format_group(g, set, b)}});
    }
    r.json = Json{{"structure", structure_json(s, b)},
                  {"quota", rational_to_string(q.value)},
                  {"inequalities", set.inequality_count()},
                  {"groups", groups},
                  {"holds", holds}};
    return r;
}

Report reduce_report(const Context& ctx, const Flags& f) {
    const auto& b = ctx.data.ballots;
    const std::int64_t budget = budget_of(f, ctx, 0);
    const ReductionReport rep = remove_irrelevant(b, budget, ctx.config, {f.aggressive});
    const ElectionConfig cfg = restrict_config(ctx.config, b, rep.surviving_ballots);
    const SequenceBounds bounds = sequence_bounds(rep.surviving_ballots, budget, cfg);
    std::size_t admitted = 0;
    const std::size_t left = rep.surviving_ballots.candidate_count();
    const auto sequences = enumerate_feasible_sequences(left, static_cast<std::size_t>(std::min<int>(
                                                                  cfg.seats, static_cast<int>(std::max<std::size_t>(left, 1)) - 1)));
    for (const auto& s : sequences) admitted += bounds.admits(s) ? 1 : 0;

    Report r;
    r.text = "Budget " + std::to_string(budget) + ", quota " + rational_to_string(rep.quota.value) + "\n";
    std::vector<std::vector<std::string>> rows{{"step", "removed", "margin"}};
    Json groups = Json::array();
    for (std::size_t i = 0; i < rep.removed.size(); ++i) {
        std::string ids;
        for (const auto& id : rep.removed[i].ids) ids += (ids.empty() ? "" : ",") + id;
        rows.push_back({std::to_string(i + 1), ids, rational_to_string(rep.removed[i].margin)});
        groups.push_back(Json{{"ids", rep.removed[i].ids}, {"margin", rational_to_string(rep.removed[i].margin)}});
    }
    if (rep.removed.empty()) r.text += "No candidate can be removed\n";
    else r.text += table(rows);
    std::vector<std::string> survivors;
    for (const auto& c : rep.surviving_ballots.candidates()) survivors.push_back(c.id);
    std::string joined;
    for (const auto& id : survivors) joined += (joined.empty() ? "" : ",") + id;
    r.text += "Removed " + std::to_string(rep.removed_count()) + " of " + std::to_string(b.candidate_count()) +
              "; survivors " + joined + "\n" + "At most " + std::to_string(bounds.max_wins) +
              " quota wins before the last round, at least " + std::to_string(bounds.min_initial_losses) +
              " opening eliminations; " + std::to_string(admitted) + " of " + std::to_string(sequences.size()) +
              " sequences admitted\n";
    r.json = Json{{"budget", budget},
                  {"quota", rational_to_string(rep.quota.value)},
                  {"removed", groups},
                  {"removed_count", rep.removed_count()},
                  {"survivors", survivors},
                  {"bounds", Json{{"max_wins", bounds.max_wins}, {"min_initial_losses", bounds.min_initial_losses}}},
                  {"sequences", Json{{"admitted", admitted}, {"feasible", sequences.size()}}}};
    r.files.emplace_back("reduced_ballots.csv", emit_ballots(rep.surviving_ballots));
    return r;
}

struct GoalSpec {
    GoalKind kind = GoalKind::Win;
    std::size_t position = 0;
    bool self_votes = false;
};

GoalSpec parse_goal(const std::string& text) {
    if (text == "win") return {GoalKind::Win, 0, false};
    if (text == "win-self") return {GoalKind::Win, 0, true};
    if (text.rfind("top", 0) == 0 && all_digits(std::string_view(text).substr(3))) {
        const std::size_t k = std::stoul(text.substr(3));
        if (k == 0) throw DataError("goal top0 asks for no place");
        return {GoalKind::TopK, k, false};
    }
    throw DataError("unknown goal '" + text + "' (expected win, win-self or topK)");
}

Json plan_json(const StrategyPlan& plan, const WeightedBallotSet& b) {
    Json rows = Json::array();
    for (const auto& [r, n] : plan.additions) rows.push_back(Json{{"ballot", ranking_json(r, b)}, {"count", n}});
    return Json{{"ballots", rows}, {"padding", plan.padding}, {"cost", plan.cost()}};
}

std::vector<std::string> plan_rows(const StrategyPlan& plan, const WeightedBallotSet& b) {
    std::vector<std::string> out;
    for (const auto& [r, n] : plan.additions) out.push_back(std::to_string(n) + " x " + b.format(r));
    if (plan.padding > 0) out.push_back(std::to_string(plan.padding) + " x [] (padding)");
    return out;
}

std::string percent_of(std::int64_t part, const Rational& total) {
    if (sgn(total) == 0) return "n/a";
    return fixed(Rational(Rational(static_cast<long>(part)) * 100 / total).get_d(), 2) + "%";
}

Report strategize_report(const Context& ctx, const Flags& f) {
    const auto& b = ctx.data.ballots;
    if (f.subject.empty()) throw DataError("strategize needs --subject");
    const Cand subject = b.at(f.subject);
    const std::string goal_text = f.goal.value_or("win");
    const GoalSpec spec = parse_goal(goal_text);
    // Enough for first-place ballots to carry anyone past everyone.
    const std::int64_t budget = budget_of(f, ctx, ceil_of(b.total_weight()).get_num().get_si() + 1);
    OptimizerOptions options;
    options.threads = f.threads;
    const ClassifiedStrategy s =
        spec.kind == GoalKind::Win
            ? optimal_win_strategy(b, subject, ctx.config, budget, spec.self_votes ? WinRoute::SelfVotes : WinRoute::Any,
                                   options)
            : optimal_topk_strategy(b, Goal::top(subject, spec.position, budget), ctx.config, options);
    const CaseAFlag case_a = detect_case_a(b, s.plan, s.realized, ctx.config);

    Report r;
    r.text = "Subject " + f.subject + ", goal " + goal_text + ", budget " + std::to_string(budget) + "\n";
    r.text += "Cost " + std::to_string(s.cost) + " (" + percent_of(s.cost, b.total_weight()) + " of " +
              rational_to_string(b.total_weight()) + ")\n";
    r.text += "Plan\n";
    for (const auto& row : plan_rows(s.plan, b)) r.text += "  " + row + "\n";
    if (s.plan.empty()) r.text += "  (no ballots needed)\n";
    r.text += "Categories " + (s.categories.empty() ? std::string("none") : s.categories.str()) + "\n";
    r.text += "Target   " + structure_text(s.target_structure, b) + "\n";
    r.text += "Realized " + structure_text(structure_of(s.realized), b) + "\n";
    std::string case_text = "not detected";
    Json case_json{{"detected", case_a.detected}};
    if (case_a.witness) {
        const auto& w = *case_a.witness;
        case_text = "detected: " + id_of(b, w.candidate) + " survives " + std::to_string(w.rounds_survived) +
                    " more round(s) and wins in round " + std::to_string(w.winning_round);
        case_json["witness"] = Json{{"candidate", id_of(b, w.candidate)},
                                    {"rounds_survived", w.rounds_survived},
                                    {"winning_round", w.winning_round}};
    }
    r.text += "Escaped-elimination win " + case_text + "\n";
    Json categories = Json::array();
    for (Category c : {Category::Selfish, Category::AltruisticToLosers, Category::AltruisticToWinners})
        if (s.categories.has(c)) categories.push_back(std::string(to_string(c)));
    r.json = Json{{"subject", f.subject},
                  {"goal", goal_text},
                  {"budget", budget},
                  {"plan", plan_json(s.plan, b)},
                  {"categories", categories},
                  {"signature", strategy_signature(s.plan, b)},
                  {"target_structure", structure_json(s.target_structure, b)},
                  {"realized_structure", structure_json(structure_of(s.realized), b)},
                  {"escaped_elimination_win", case_json}};
    return r;
}

Report bootstrap_report(const Context& ctx, const Flags& f) {
    const auto& b = ctx.data.ballots;
    const auto& respondents = ctx.data.respondents;
    const GoalSpec spec = parse_goal(f.goal.value_or("top2"));
    if (spec.self_votes) throw DataError("bootstrap takes win or topK goals");

    BootstrapConfig boot;
    boot.samples = f.samples ? *f.samples : ctx.run.samples.value_or(100);
    if (boot.samples < 1) throw DataError("--samples must be at least 1");
    boot.seed = f.seed ? *f.seed : ctx.run.seed.value_or(0);
    boot.budget = budget_of(f, ctx, 0);
    boot.goal = GoalTemplate{spec.kind, spec.kind == GoalKind::TopK ? spec.position : 2};
    boot.threads = f.threads;
    const std::size_t slots = goal_slots(boot.goal, ctx.config);
    const std::size_t n = b.candidate_count();

    // Full-data plans for every candidate short of the goal, then how often each holds up.
    struct Row {
        std::string label;
        std::optional<ClassifiedStrategy> strategy;
        EfficacyTable efficacy;
    };
    std::vector<Row> rows;
    rows.push_back({"none", std::nullopt, strategy_efficacy(StrategyPlan{}, respondents, boot, ctx.config)});
    const ElectionOutcome plain = run_election(b, ctx.config);
    OptimizerOptions options;
    options.threads = f.threads;
    for (std::size_t i = 0; i < n; ++i) {
        const Cand c = cand(i);
        const Goal goal = spec.kind == GoalKind::Win ? Goal::win(c, boot.budget)
                                                     : Goal::top(c, spec.position, boot.budget);
        if (goal_met(plain, goal, ctx.config)) continue;
        try {
            auto s = optimal_strategy(b, goal, ctx.config, options);
            auto eff = strategy_efficacy(s.plan, respondents, boot, ctx.config);
            rows.push_back({id_of(b, c), std::move(s), std::move(eff)});
        } catch (const Infeasible&) {
            rows.push_back({id_of(b, c), std::nullopt, {}});
        }
    }
    const PerSampleReport per = per_sample_optimal(respondents, boot, ctx.config);

    Report r;
    r.text = "Samples " + std::to_string(boot.samples) + ", seed " + std::to_string(boot.seed) + ", budget " +
             std::to_string(boot.budget) + ", goal " + (spec.kind == GoalKind::Win ? "win" : "top" + std::to_string(slots)) +
             ", respondents " + std::to_string(respondents.size()) + "\n";

    // efficacy: share of samples placing each candidate within the goal, per full-data plan
    std::string eff_csv = "strategy_for,plan,cost";
    std::vector<std::vector<std::string>> eff_rows{{"strategy for", "plan", "cost"}};
    for (std::size_t i = 0; i < n; ++i) {
        eff_csv += "," + csv_field(id_of(b, cand(i)));
        eff_rows[0].push_back(id_of(b, cand(i)));
    }
    eff_csv += "\n";
    Json eff_json = Json::array();
    for (const auto& row : rows) {
        const bool have = row.label == "none" || row.strategy;
        std::string plan_text = "-", cost = "-";
        if (row.strategy) {
            plan_text.clear();
            for (const auto& p : plan_rows(row.strategy->plan, b)) plan_text += (plan_text.empty() ? "" : "; ") + p;
            cost = std::to_string(row.strategy->cost);
        } else if (row.label != "none") {
            plan_text = "infeasible";
        }
        std::vector<std::string> line{row.label, plan_text, cost};
        Json freq = Json::object();
        for (std::size_t i = 0; i < n; ++i) {
            const std::string v = have ? fixed(row.efficacy.frequency[i], 4) : "";
            line.push_back(v);
            if (have) freq[id_of(b, cand(i))] = row.efficacy.frequency[i];
        }
        eff_rows.push_back(line);
        eff_csv += csv_field(row.label) + "," + csv_field(plan_text) + "," + cost;
        for (std::size_t i = 0; i < n; ++i) eff_csv += "," + line[3 + i];
        eff_csv += "\n";
        Json j{{"strategy_for", row.label}, {"feasible", have}};
        if (row.strategy) j["plan"] = plan_json(row.strategy->plan, b);
        j["frequency"] = freq;
        eff_json.push_back(std::move(j));
    }
    r.text += "\nShare of samples within the goal, by full-data plan\n" + table(eff_rows);

    // per candidate: how often a plan was needed and found in the sample itself
    std::string per_csv = "candidate,needed,feasible,feasible_share,average_cost\n";
    std::vector<std::vector<std::string>> per_rows{{"candidate", "needed", "feasible", "share", "average cost"}};
    std::string dist_csv = "candidate,signature,samples,percent\n";
    std::vector<std::vector<std::string>> dist_rows{{"candidate", "signature", "samples", "percent"}};
    Json per_json = Json::array();
    for (std::size_t i = 0; i < per.distribution.by_candidate.size(); ++i) {
        const auto& id = per.distribution.candidates[i];
        const auto& cs = per.distribution.by_candidate[i];
        const double share = cs.needed ? static_cast<double>(cs.feasible) / cs.needed : 0.0;
        const std::vector<std::string> line{id, std::to_string(cs.needed), std::to_string(cs.feasible), fixed(share, 4),
                                            fixed(cs.average_cost, 2)};
        per_rows.push_back(line);
        per_csv += csv_field(id) + "," + line[1] + "," + line[2] + "," + line[3] + "," + line[4] + "\n";
        // most common signature first, ties alphabetical
        std::vector<std::pair<std::string, int>> sigs(cs.signatures.begin(), cs.signatures.end());
        std::stable_sort(sigs.begin(), sigs.end(), [](const auto& a, const auto& c) { return a.second > c.second; });
        Json sig_json = Json::array();
        for (const auto& [sig, count] : sigs) {
            dist_rows.push_back({id, sig, std::to_string(count), fixed(cs.percent(sig), 2)});
            dist_csv += csv_field(id) + "," + csv_field(sig) + "," + std::to_string(count) + "," +
                        fixed(cs.percent(sig), 2) + "\n";
            sig_json.push_back(Json{{"signature", sig}, {"samples", count}, {"percent", cs.percent(sig)}});
        }
        Json cat_json = Json::object();
        for (const auto& [cat, count] : cs.categories) cat_json[cat] = count;
        per_json.push_back(Json{{"candidate", id},
                                {"needed", cs.needed},
                                {"feasible", cs.feasible},
                                {"average_cost", cs.average_cost},
                                {"signatures", sig_json},
                                {"categories", cat_json}});
    }
    r.text += "\nPer-sample optimal plans\n" + table(per_rows);
    r.text += "\nPlan signatures (first choices of added ballots, most votes first)\n";
    r.text += dist_rows.size() > 1 ? table(dist_rows) : "  (none)\n";

    std::string samples_csv = "sample,seed,removed\n";
    Json sample_json = Json::array();
    std::size_t most = 0;
    for (std::size_t i = 0; i < per.seeds.size(); ++i) {
        samples_csv += std::to_string(i) + "," + std::to_string(per.seeds[i]) + "," + std::to_string(per.removed[i]) + "\n";
        sample_json.push_back(Json{{"seed", per.seeds[i]}, {"removed", per.removed[i]}});
        most = std::max(most, per.removed[i]);
    }
    std::vector<std::vector<std::string>> red_rows{{"removed at least", "share of samples"}};
    for (std::size_t k = 1; k <= most; ++k) red_rows.push_back({std::to_string(k), fixed(per.reduction_rate(k), 4)});
    r.text += "\nCandidates removed before searching\n";
    r.text += most ? table(red_rows) : "  none in any sample\n";

    Json baseline = Json::object();
    for (std::size_t i = 0; i < per.baseline.candidates.size(); ++i)
        baseline[per.baseline.candidates[i]] = per.baseline.frequency[i];
    r.json = Json{{"samples", boot.samples},
                  {"seed", boot.seed},
                  {"budget", boot.budget},
                  {"slots", slots},
                  {"goal", spec.kind == GoalKind::Win ? "win" : "top" + std::to_string(slots)},
                  {"efficacy", eff_json},
                  {"baseline", baseline},
                  {"per_candidate", per_json},
                  {"per_sample", sample_json}};
    r.files.emplace_back("efficacy.csv", eff_csv);
    r.files.emplace_back("per_sample.csv", per_csv);
    r.files.emplace_back("distribution.csv", dist_csv);
    r.files.emplace_back("samples.csv", samples_csv);
    return r;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exact STV tabulation and cheapest vote-addition strategies", "stvopt"};
    app.require_subcommand(1);
    Flags f;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--ballots", f.ballots, "ballot CSV (respondent_id,weight,rank1,...)")->required();
        sub->add_option("--config", f.config, "key = value run configuration");
        sub->add_option("--seats", f.seats, "number of seats");
        sub->add_option("--quota", f.quota, "fixed quota instead of the Droop quota");
        sub->add_option("--out-dir", f.out_dir, "directory for JSON and CSV reports");
        sub->add_flag("--json", f.json, "print the JSON report instead of the table");
    };
    const auto budget = [&](CLI::App* sub, const std::string& help) {
        sub->add_option("--max-budget,--budget", f.budget, help);
    };
    const auto threads = [&](CLI::App* sub) { sub->add_option("--threads", f.threads, "worker threads, 0 for all cores"); };

    auto* tally = app.add_subcommand("tally", "round-by-round count");
    common(tally);
    auto* constraints = app.add_subcommand("constraints", "inequalities defining one order and sequence");
    common(constraints);
    constraints->add_option("--order", f.order, "full order, e.g. M,E,N")->required();
    constraints->add_option("--sequence", f.sequence, "round labels, e.g. LWW")->required();
    auto* reduce = app.add_subcommand("reduce", "remove candidates no budget-sized addition can rescue");
    common(reduce);
    budget(reduce, "ballots that may be added (N or P%)");
    reduce->add_flag("--aggressive", f.aggressive, "also try groups without their strongest member");
    auto* strategize = app.add_subcommand("strategize", "cheapest ballots that reach a goal for one candidate");
    common(strategize);
    strategize->add_option("--subject", f.subject, "candidate id")->required();
    strategize->add_option("--goal", f.goal, "win (default), win-self or topK");
    budget(strategize, "largest number of added ballots (N or P%)");
    threads(strategize);
    auto* bootstrap = app.add_subcommand("bootstrap", "resample respondents and rerun the analysis");
    common(bootstrap);
    bootstrap->add_option("--goal", f.goal, "win or topK (default top2)");
    budget(bootstrap, "largest number of added ballots (N or P%)");
    bootstrap->add_option("--samples", f.samples, "bootstrap samples");
    bootstrap->add_option("--seed", f.seed, "master seed");
    threads(bootstrap);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        const Context ctx = load(f);
        if (tally->parsed()) emit(f, "tally", tally_report(ctx), out);
        else if (constraints->parsed()) emit(f, "constraints", constraints_report(ctx, f), out);
        else if (reduce->parsed()) emit(f, "reduce", reduce_report(ctx, f), out);
        else if (strategize->parsed()) emit(f, "strategize", strategize_report(ctx, f), out);
        else emit(f, "bootstrap", bootstrap_report(ctx, f), out);
    } catch (const Infeasible& e) {
        err << "infeasible: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace stvopt
