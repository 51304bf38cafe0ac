#include "detroll/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <map>
#include <thread>

#include "detroll/errors.hpp"
#include "detroll/imputer.hpp"
#include "detroll/io.hpp"

namespace detroll {

namespace {

AccuracyStats stats_of(const std::vector<double>& xs) {
    AccuracyStats s;
    if (xs.empty()) return s;
    s.min = *std::min_element(xs.begin(), xs.end());
    s.max = *std::max_element(xs.begin(), xs.end());
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

constexpr std::string_view kRunsHeader =
    "scenario_id,unsafe_prevalence,troll_prevalence,corrupt_action,troll_corrupt_rate,"
    "run_index,seed,acc_lca_sm,acc_mv,lca_converged,pruned_users,dropped_rows";

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

RunRecord run_single(const Scenario& scenario, std::size_t run_index, std::uint64_t grid_seed,
                     const EmConfig& em) {
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.scenario = scenario;
    rec.run_index = run_index;
    rec.seed = derive_run_seed(grid_seed, scenario, run_index);

    const SimulatedRun run = simulate_run(scenario, rec.seed);
    rec.acc_mv = imputation_accuracy(impute_mv(run.matrix), run.gold);

    try {
        const PruneResult pruned = prune_invalid_columns(run.matrix);
        rec.pruned_users = pruned.removed_users.size();
        rec.dropped_rows = pruned.dropped_rows.size();

        EmConfig config = em;
        config.seed = rec.seed;
        const FitResult fit = fit_with_restarts(pruned.matrix, config);
        rec.lca_converged = fit.converged;
        rec.lca_restart_winner = fit.restart_index;
        rec.n_fits = fit.restarts.size();
        for (const auto& r : fit.restarts)
            if (!r.failed) rec.max_loglik_decrease = std::max(rec.max_loglik_decrease, r.max_decrease);

        std::vector<Label> gold;
        gold.reserve(pruned.utterance_map.size());
        for (std::size_t i : pruned.utterance_map) gold.push_back(run.gold[i]);
        rec.acc_lca_sm = imputation_accuracy(impute_lca_sm(fit, pruned.matrix), gold);
    } catch (const UnfittableError& e) {
        rec.pruned_users = validate_for_lca(run.matrix).single_valued_columns.size();
        rec.error = e.what();
    } catch (const NumericalError& e) {
        rec.error = e.what();
    }

    rec.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

std::vector<RunRecord> run_grid(std::span<const Scenario> grid, std::size_t runs,
                                std::uint64_t grid_seed, const HarnessOptions& options) {
    if (runs < 1) throw ContractError("runs must be >= 1");
    options.em.validate();
    for (const auto& s : grid) s.validate();

    const std::size_t total = grid.size() * runs;
    std::vector<RunRecord> records(total);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t job = next++; job < total; job = next++)
            records[job] = run_single(grid[job / runs], job % runs, grid_seed, options.em);
    };

    const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(total, 1));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(jobs);
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    }
    return records;
}

std::vector<RunRecord> run_scenario(const Scenario& scenario, std::size_t runs,
                                    std::uint64_t grid_seed, const HarnessOptions& options) {
    return run_grid(std::span<const Scenario>(&scenario, 1), runs, grid_seed, options);
}

void sort_records(std::vector<RunRecord>& records) {
    std::stable_sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
        const auto ia = a.scenario.id();
        const auto ib = b.scenario.id();
        return ia != ib ? ia < ib : a.run_index < b.run_index;
    });
}

std::vector<ScenarioSummary> summarize(std::span<const RunRecord> records) {
    if (records.empty()) throw ContractError("cannot summarize an empty record set");
    std::map<std::string, std::vector<const RunRecord*>> groups;
    for (const auto& r : records) groups[r.scenario.id()].push_back(&r);

    std::vector<ScenarioSummary> out;
    for (auto& [id, group] : groups) {
        std::sort(group.begin(), group.end(),
                  [](const RunRecord* a, const RunRecord* b) { return a->run_index < b->run_index; });
        ScenarioSummary s;
        s.scenario = group.front()->scenario;
        s.n_runs = group.size();
        s.all_safe_baseline = 1.0 - s.scenario.unsafe_prevalence;

        std::vector<double> lca, mv;
        std::size_t wins = 0, ties = 0, losses = 0;
        for (const RunRecord* r : group) {
            mv.push_back(r->acc_mv);
            if (!r->acc_lca_sm) {
                ++s.n_unfittable;
                continue;
            }
            lca.push_back(*r->acc_lca_sm);
            if (*r->acc_lca_sm > r->acc_mv) ++wins;
            else if (*r->acc_lca_sm == r->acc_mv) ++ties;
            else ++losses;
        }
        s.lca = stats_of(lca);
        s.mv = stats_of(mv);
        if (!lca.empty()) {
            const double n = static_cast<double>(lca.size());
            s.win_rate = static_cast<double>(wins) / n;
            s.tie_rate = static_cast<double>(ties) / n;
            s.loss_rate = static_cast<double>(losses) / n;
        }
        out.push_back(s);
    }
    return out;
}

std::string runs_csv(std::span<const RunRecord> records) {
    std::vector<RunRecord> sorted(records.begin(), records.end());
    sort_records(sorted);
    std::string out(kRunsHeader);
    out += '\n';
    for (const auto& r : sorted) {
        const Scenario& s = r.scenario;
        out += s.id() + ',' + io::format_shortest(s.unsafe_prevalence) + ',' +
               io::format_shortest(s.troll_prevalence) + ',' + std::string(to_string(s.corrupt_action)) +
               ',' + io::format_shortest(s.troll_corrupt_rate) + ',' + std::to_string(r.run_index) +
               ',' + std::to_string(r.seed) + ',' +
               (r.acc_lca_sm ? io::format_shortest(*r.acc_lca_sm) : std::string()) + ',' +
               io::format_shortest(r.acc_mv) + ',' + (r.lca_converged ? "1" : "0") + ',' +
               std::to_string(r.pruned_users) + ',' + std::to_string(r.dropped_rows) + '\n';
    }
    return out;
}

std::string summary_csv(std::span<const ScenarioSummary> summaries) {
    std::string out =
        "scenario_id,unsafe_prevalence,troll_prevalence,corrupt_action,troll_corrupt_rate,"
        "helper_corrupt_rate,helper_corrupt_action,n_utterances,pool_size,raters_per_utterance,"
        "n_runs,n_unfittable,mean_lca,sd_lca,mean_mv,sd_mv,win_rate,tie_rate,all_safe_baseline\n";
    for (const auto& sm : summaries) {
        const Scenario& s = sm.scenario;
        const bool has_lca = sm.n_unfittable < sm.n_runs;
        const auto opt = [&](double v) { return has_lca ? io::format_shortest(v) : std::string(); };
        out += s.id() + ',' + io::format_shortest(s.unsafe_prevalence) + ',' +
               io::format_shortest(s.troll_prevalence) + ',' + std::string(to_string(s.corrupt_action)) +
               ',' + io::format_shortest(s.troll_corrupt_rate) + ',' +
               io::format_shortest(s.helper_corrupt_rate) + ',' +
               std::string(to_string(s.helper_corrupt_action)) + ',' + std::to_string(s.n_utterances) +
               ',' + std::to_string(s.pool_size) + ',' + std::to_string(s.raters_per_utterance) + ',' +
               std::to_string(sm.n_runs) + ',' + std::to_string(sm.n_unfittable) + ',' +
               opt(sm.lca.mean) + ',' + opt(sm.lca.sd) + ',' + io::format_shortest(sm.mv.mean) + ',' +
               io::format_shortest(sm.mv.sd) + ',' + opt(sm.win_rate) + ',' + opt(sm.tie_rate) + ',' +
               io::format_shortest(sm.all_safe_baseline) + '\n';
    }
    return out;
}

std::string scatter_csv(std::span<const RunRecord> records, const Scenario& scenario) {
    std::vector<const RunRecord*> rows;
    for (const auto& r : records)
        if (r.scenario == scenario && r.acc_lca_sm) rows.push_back(&r);
    std::sort(rows.begin(), rows.end(),
              [](const RunRecord* a, const RunRecord* b) { return a->run_index < b->run_index; });
    std::string out = "acc_mv,acc_lca_sm\n";
    for (const RunRecord* r : rows)
        out += io::format_shortest(r->acc_mv) + ',' + io::format_shortest(*r->acc_lca_sm) + '\n';
    return out;
}

void emit_report(std::span<const ScenarioSummary> summaries, std::span<const RunRecord> records,
                 const std::filesystem::path& output_dir, const ReportMetadata& meta) {
    if (records.empty() || summaries.empty())
        throw ContractError("cannot emit a report without records");
    std::error_code ec;
    std::filesystem::create_directories(output_dir, ec);
    if (ec) throw IoError("cannot create '" + output_dir.string() + "': " + ec.message());

    io::write_file(output_dir / "runs.csv", runs_csv(records));
    io::write_file(output_dir / "summary.csv", summary_csv(summaries));

    nlohmann::json scenarios = nlohmann::json::array();
    std::map<std::string, double> scenario_ms;
    for (const auto& r : records) scenario_ms[r.scenario.id()] += r.wall_time_ms;
    for (const auto& sm : summaries) {
        const std::string id = sm.scenario.id();
        const std::string file = "scatter_" + id + ".csv";
        io::write_file(output_dir / file, scatter_csv(records, sm.scenario));
        auto entry = io::to_json(sm.scenario);
        entry["scenario_id"] = id;
        entry["scatter_file"] = file;
        entry["n_runs"] = sm.n_runs;
        entry["n_unfittable"] = sm.n_unfittable;
        entry["wall_time_ms"] = scenario_ms[id];
        scenarios.push_back(entry);
    }

    const nlohmann::json manifest{
        {"tool", "detroll"},
        {"version", DETROLL_VERSION},
        {"compiler", __VERSION__},
        {"created_utc", utc_timestamp()},
        {"grid_seed", meta.grid_seed ? nlohmann::json(*meta.grid_seed) : nlohmann::json(nullptr)},
        {"source", meta.source},
        {"runs", meta.runs},
        {"jobs", meta.jobs},
        {"n_records", records.size()},
        {"total_wall_time_ms", meta.total_wall_time_ms},
        {"seed_derivation",
         "seed = splitmix64(splitmix64(splitmix64(grid_seed) ^ fnv1a64(scenario_id)) ^ run_index)"},
        {"em",
         {{"max_iterations", EmConfig{}.max_iterations},
          {"tolerance", EmConfig{}.tolerance},
          {"n_restarts", EmConfig{}.n_restarts},
          {"clamp_epsilon", EmConfig{}.clamp_epsilon}}},
        {"scenarios", scenarios}};
    io::write_file(output_dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<RunRecord> parse_runs_csv(const std::string& text) {
    std::vector<RunRecord> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool header_seen = false;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != kRunsHeader) throw ContractError("runs.csv: unexpected header");
            header_seen = true;
            continue;
        }
        std::vector<std::string> f;
        for (std::size_t s = 0;;) {
            const auto pos = line.find(',', s);
            f.emplace_back(line.substr(s, pos - s));
            if (pos == std::string_view::npos) break;
            s = pos + 1;
        }
        const auto fail = [&](const std::string& what) {
            return ContractError("runs.csv line " + std::to_string(line_no) + ": " + what);
        };
        if (f.size() != 12) throw fail("expected 12 fields");
        try {
            RunRecord r;
            r.scenario = Scenario::from_id(f[0]);
            r.run_index = std::stoull(f[5]);
            r.seed = std::stoull(f[6]);
            if (!f[7].empty()) r.acc_lca_sm = std::stod(f[7]);
            r.acc_mv = std::stod(f[8]);
            r.lca_converged = f[9] == "1";
            r.pruned_users = std::stoull(f[10]);
            r.dropped_rows = std::stoull(f[11]);
            out.push_back(std::move(r));
        } catch (const ContractError& e) {
            throw fail(e.what());
        } catch (const std::logic_error& e) {
            throw fail(std::string("bad number: ") + e.what());
        }
    }
    if (!header_seen) throw ContractError("runs.csv: missing header");
    return out;
}

}  // namespace detroll
