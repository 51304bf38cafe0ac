#include "detroll/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "detroll/errors.hpp"

namespace detroll::io {

using nlohmann::json;

namespace {

// Splits on newlines, strips a trailing '\r', skips blank lines.
std::vector<std::pair<std::size_t, std::string_view>> lines_of(std::string_view text) {
    std::vector<std::pair<std::size_t, std::string_view>> out;
    std::size_t line_no = 0;
    for (std::size_t start = 0; start <= text.size();) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) out.emplace_back(line_no, line);
        start = end + 1;
    }
    return out;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    for (std::size_t start = 0;;) {
        const auto pos = line.find(',', start);
        fields.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

ContractError csv_error(std::size_t line_no, const std::string& what) {
    return ContractError("line " + std::to_string(line_no) + ": " + what);
}

Label parse_label(std::string_view field, std::size_t line_no) {
    if (field == "0") return Label::safe;
    if (field == "1") return Label::unsafe;
    throw csv_error(line_no, "label must be 0 or 1, got '" + std::string(field) + "'");
}

void expect_header(const std::vector<std::pair<std::size_t, std::string_view>>& lines,
                   std::string_view header) {
    if (lines.empty() || lines.front().second != header)
        throw ContractError("expected CSV header '" + std::string(header) + "'");
}

std::size_t index_of(std::unordered_map<std::string, std::size_t>& map,
                     std::vector<std::string>& ids, std::string_view id) {
    auto [it, inserted] = map.try_emplace(std::string(id), ids.size());
    if (inserted) ids.emplace_back(id);
    return it->second;
}

template <typename T>
T get_field(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ContractError(std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

std::string format_double(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string format_shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

LabeledMatrix parse_matrix_csv(std::string_view text) {
    const auto lines = lines_of(text);
    expect_header(lines, "utterance_id,user_id,label");
    std::unordered_map<std::string, std::size_t> utt_map, user_map;
    std::vector<std::string> utt_ids, user_ids;
    std::vector<Cell> cells;
    std::unordered_map<std::uint64_t, std::size_t> seen;  // (utterance, user) -> line
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto [line_no, line] = lines[k];
        const auto f = split(line);
        if (f.size() != 3) throw csv_error(line_no, "expected 3 fields");
        if (f[0].empty() || f[1].empty()) throw csv_error(line_no, "empty id");
        const Label label = parse_label(f[2], line_no);
        const Cell cell{index_of(utt_map, utt_ids, f[0]), index_of(user_map, user_ids, f[1]), label};
        const auto key = (static_cast<std::uint64_t>(cell.utterance) << 32) | cell.user;
        if (auto [it, fresh] = seen.try_emplace(key, line_no); !fresh)
            throw csv_error(line_no, "duplicate cell (utterance '" + std::string(f[0]) +
                                         "', user '" + std::string(f[1]) + "'), first on line " +
                                         std::to_string(it->second));
        cells.push_back(cell);
    }
    if (cells.empty()) throw ContractError("matrix CSV has no cells");
    auto m = InterRaterMatrix::build(utt_ids.size(), user_ids.size(), cells);
    return LabeledMatrix{std::move(m), std::move(utt_ids), std::move(user_ids)};
}

std::string matrix_csv(const LabeledMatrix& m) {
    std::string out = "utterance_id,user_id,label\n";
    for (const Cell& c : m.matrix.cells()) {
        out += m.utterance_ids[c.utterance];
        out += ',';
        out += m.user_ids[c.user];
        out += ',';
        out += c.label == Label::unsafe ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::vector<std::pair<std::string, Label>> parse_gold_csv(std::string_view text) {
    const auto lines = lines_of(text);
    expect_header(lines, "utterance_id,label");
    std::vector<std::pair<std::string, Label>> out;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto [line_no, line] = lines[k];
        const auto f = split(line);
        if (f.size() != 2) throw csv_error(line_no, "expected 2 fields");
        out.emplace_back(std::string(f[0]), parse_label(f[1], line_no));
    }
    return out;
}

std::string gold_csv(std::span<const Label> gold) {
    std::string out = "utterance_id,label\n";
    for (std::size_t i = 0; i < gold.size(); ++i)
        out += std::to_string(i) + ',' + (gold[i] == Label::unsafe ? "1" : "0") + '\n';
    return out;
}

std::string roles_csv(std::span<const RaterRole> roles) {
    std::string out = "user_id,kind\n";
    for (std::size_t u = 0; u < roles.size(); ++u)
        out += std::to_string(u) + ',' + std::string(to_string(roles[u].kind)) + '\n';
    return out;
}

LabeledMatrix with_index_ids(InterRaterMatrix matrix) {
    LabeledMatrix m{std::move(matrix), {}, {}};
    for (std::size_t i = 0; i < m.matrix.n_utterances(); ++i)
        m.utterance_ids.push_back(std::to_string(i));
    for (std::size_t u = 0; u < m.matrix.n_users(); ++u) m.user_ids.push_back(std::to_string(u));
    return m;
}

json to_json(const Scenario& s) {
    return json{{"unsafe_prevalence", s.unsafe_prevalence},
                {"troll_prevalence", s.troll_prevalence},
                {"corrupt_action", to_string(s.corrupt_action)},
                {"troll_corrupt_rate", s.troll_corrupt_rate},
                {"helper_corrupt_rate", s.helper_corrupt_rate},
                {"helper_corrupt_action", to_string(s.helper_corrupt_action)},
                {"n_utterances", s.n_utterances},
                {"pool_size", s.pool_size},
                {"raters_per_utterance", s.raters_per_utterance}};
}

Scenario scenario_from_json(const json& j) {
    if (!j.is_object()) throw ContractError("scenario must be a JSON object");
    static const std::vector<std::string> known = {
        "unsafe_prevalence",   "troll_prevalence", "corrupt_action",
        "troll_corrupt_rate",  "helper_corrupt_rate", "helper_corrupt_action",
        "n_utterances",        "pool_size",        "raters_per_utterance"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ContractError("unknown scenario field '" + key + "'");
    }
    const auto count = [&](const char* key, std::size_t fallback) {
        if (j.contains(key) && !(j.at(key).is_number_unsigned()))
            throw ContractError(std::string("field '") + key + "' must be a non-negative integer");
        return get_field<std::size_t>(j, key, fallback);
    };
    const auto prob = [&](const char* key, double fallback) {
        if (j.contains(key) && !j.at(key).is_number())
            throw ContractError(std::string("field '") + key + "' must be a number");
        return get_field<double>(j, key, fallback);
    };

    Scenario d;
    Scenario s;
    s.unsafe_prevalence = prob("unsafe_prevalence", d.unsafe_prevalence);
    s.troll_prevalence = prob("troll_prevalence", d.troll_prevalence);
    s.corrupt_action = corrupt_action_from_string(
        get_field<std::string>(j, "corrupt_action", std::string(to_string(d.corrupt_action))));
    s.troll_corrupt_rate = prob("troll_corrupt_rate", d.troll_corrupt_rate);
    s.helper_corrupt_rate = prob("helper_corrupt_rate", d.helper_corrupt_rate);
    s.helper_corrupt_action = corrupt_action_from_string(get_field<std::string>(
        j, "helper_corrupt_action", std::string(to_string(d.helper_corrupt_action))));
    s.n_utterances = count("n_utterances", d.n_utterances);
    s.pool_size = count("pool_size", d.pool_size);
    s.raters_per_utterance = count("raters_per_utterance", d.raters_per_utterance);
    s.validate();
    return s;
}

GridConfig grid_from_json(const json& j) {
    if (!j.is_object() || !j.contains("scenarios") || !j.at("scenarios").is_array())
        throw ContractError("grid config must be an object with a 'scenarios' array");
    for (const auto& [key, value] : j.items()) {
        if (key != "scenarios" && key != "runs" && key != "grid_seed")
            throw ContractError("unknown grid field '" + key + "'");
    }
    GridConfig g;
    const auto& list = j.at("scenarios");
    for (std::size_t k = 0; k < list.size(); ++k) {
        try {
            g.scenarios.push_back(scenario_from_json(list[k]));
        } catch (const ContractError& e) {
            throw ContractError("scenarios[" + std::to_string(k) + "]: " + e.what());
        }
    }
    if (g.scenarios.empty()) throw ContractError("grid has no scenarios");
    if (j.contains("runs") && !j.at("runs").is_number_unsigned())
        throw ContractError("field 'runs' must be a positive integer");
    if (j.contains("grid_seed") && !j.at("grid_seed").is_number_unsigned())
        throw ContractError("field 'grid_seed' must be a non-negative integer");
    g.runs = get_field<std::size_t>(j, "runs", g.runs);
    g.grid_seed = get_field<std::uint64_t>(j, "grid_seed", g.grid_seed);
    if (g.runs < 1) throw ContractError("field 'runs' must be >= 1");
    return g;
}

json to_json(const GridConfig& g) {
    json list = json::array();
    for (const auto& s : g.scenarios) list.push_back(to_json(s));
    return json{{"runs", g.runs}, {"grid_seed", g.grid_seed}, {"scenarios", list}};
}

json to_json(const FitResult& fit) {
    json theta = json::array();
    for (const auto& t : fit.params.theta) theta.push_back({t[0], t[1]});
    return json{{"prior_a", fit.params.prior_a},
                {"theta", theta},
                {"posteriors", fit.posteriors},
                {"loglik_trace", fit.loglik_trace},
                {"converged", fit.converged},
                {"iterations", fit.iterations},
                {"restart_index", fit.restart_index}};
}

FitResult fit_from_json(const json& j) {
    try {
        FitResult fit;
        fit.params.prior_a = j.at("prior_a").get<double>();
        for (const auto& t : j.at("theta"))
            fit.params.theta.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
        fit.posteriors = j.at("posteriors").get<std::vector<double>>();
        fit.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
        fit.converged = j.at("converged").get<bool>();
        fit.iterations = j.at("iterations").get<std::size_t>();
        fit.restart_index = j.at("restart_index").get<std::size_t>();
        return fit;
    } catch (const json::exception& e) {
        throw ContractError(std::string("malformed fit JSON: ") + e.what());
    }
}

std::string imputation_csv(const ImputationResult& r, std::span<const std::string> utterance_ids) {
    if (utterance_ids.size() != r.labels.size())
        throw ContractError("utterance id count does not match imputed labels");
    std::vector<bool> tied(r.labels.size(), false);
    for (std::size_t i : r.tie_rows) tied[i] = true;
    std::string out = "utterance_id,method,label,tied\n";
    for (std::size_t i = 0; i < r.labels.size(); ++i) {
        out += utterance_ids[i];
        out += ',';
        out += to_string(r.method);
        out += r.labels[i] == Label::unsafe ? ",1," : ",0,";
        out += tied[i] ? "1\n" : "0\n";
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

json read_json(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ContractError("'" + path.string() + "': " + e.what());
    }
}

}  // namespace detroll::io
