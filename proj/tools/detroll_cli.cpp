// detroll: simulate crowd-labeled data, fit the two-cluster LCA, impute
// labels, and run Monte-Carlo troll-scenario grids.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "detroll/errors.hpp"
#include "detroll/harness.hpp"
#include "detroll/imputer.hpp"
#include "detroll/io.hpp"
#include "detroll/lca.hpp"
#include "detroll/rater_matrix.hpp"
#include "detroll/troll_sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace detroll;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitContract = 1;
constexpr int kExitIo = 2;

struct SimulateArgs {
    std::string scenario;
    std::uint64_t seed = 0;
    std::string out;
};

struct FitArgs {
    std::string matrix;
    std::string out;
    EmConfig em;
    bool skip_validation = false;
};

struct ImputeArgs {
    std::string matrix;
    std::string fit;
    bool mv = false;
    std::string gold;
    std::string out;
};

struct ExperimentArgs {
    std::string grid;
    std::optional<std::size_t> runs;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    std::string out;
};

struct ReportArgs {
    std::string runs;
    std::string out;
};

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

// Replaces `target` with the fully written `staging` directory. An existing
// non-empty target is only replaced if it holds a previous report.
void publish_dir(const fs::path& staging, const fs::path& target) {
    std::error_code ec;
    if (fs::exists(target)) {
        if (!fs::is_empty(target) && !fs::exists(target / "manifest.json"))
            throw IoError("refusing to overwrite non-report directory '" + target.string() + "'");
        fs::remove_all(target, ec);
        if (ec) throw IoError("cannot replace '" + target.string() + "': " + ec.message());
    }
    if (target.has_parent_path()) ensure_dir(target.parent_path());
    fs::rename(staging, target, ec);
    if (ec) throw IoError("cannot move report into '" + target.string() + "': " + ec.message());
}

fs::path staging_dir_for(const fs::path& target) {
    fs::path staging = target;
    staging += ".tmp-" + std::to_string(
                             std::chrono::steady_clock::now().time_since_epoch().count());
    return staging;
}

struct FitInput {
    InterRaterMatrix matrix;
    std::vector<std::string> utterance_ids;
    std::vector<std::string> user_ids;
    std::vector<std::string> removed_users;
    std::vector<std::string> dropped_rows;
};

// Reconstructs the matrix a fit is made on: raw when validation is skipped,
// otherwise pruned of single-valued columns.
FitInput prepare_fit_input(const io::LabeledMatrix& lm, bool skip_validation) {
    if (skip_validation) return FitInput{lm.matrix, lm.utterance_ids, lm.user_ids, {}, {}};
    const PruneResult pr = prune_invalid_columns(lm.matrix);
    FitInput in{pr.matrix, {}, {}, {}, {}};
    for (std::size_t i : pr.utterance_map) in.utterance_ids.push_back(lm.utterance_ids[i]);
    for (std::size_t u : pr.user_map) in.user_ids.push_back(lm.user_ids[u]);
    for (std::size_t u : pr.removed_users) in.removed_users.push_back(lm.user_ids[u]);
    for (std::size_t i : pr.dropped_rows) in.dropped_rows.push_back(lm.utterance_ids[i]);
    return in;
}

int cmd_simulate(const SimulateArgs& a) {
    const Scenario scenario = io::scenario_from_json(io::read_json(a.scenario));
    const SimulatedRun run = simulate_run(scenario, a.seed);
    const fs::path out(a.out);
    ensure_dir(out);
    io::write_file(out / "matrix.csv", io::matrix_csv(io::with_index_ids(run.matrix)));
    io::write_file(out / "gold.csv", io::gold_csv(run.gold));
    io::write_file(out / "roles.csv", io::roles_csv(run.roles));
    std::cout << "scenario " << scenario.id() << " seed " << a.seed << ": "
              << run.matrix.n_cells() << " cells written to " << out.string() << "\n";
    return kExitOk;
}

int cmd_fit(const FitArgs& a) {
    a.em.validate();
    const auto lm = io::parse_matrix_csv(io::read_file(a.matrix));
    const ValidityReport report = validate_for_lca(lm.matrix);
    if (a.skip_validation) {
        std::cerr << "WARNING: --skip-validation set; fitting a matrix that "
                  << (report.fittable ? "happens to satisfy" : "VIOLATES")
                  << " the LCA fitting requirements. Use only for illustration.\n";
    } else if (!report.fittable) {
        if (!report.row_count_ok)
            std::cerr << "requirement (1): " << lm.matrix.n_utterances() << " rows < 2 x "
                      << lm.matrix.n_users() << " columns (rows must be at least twice the columns)\n";
        if (!report.single_valued_columns.empty())
            std::cerr << "requirement (2): " << report.single_valued_columns.size()
                      << " column(s) lack both labels; pruning them\n";
    }

    const FitInput in = prepare_fit_input(lm, a.skip_validation);
    const FitResult fit = fit_with_restarts(in.matrix, a.em);

    json j = io::to_json(fit);
    j["utterance_ids"] = in.utterance_ids;
    j["user_ids"] = in.user_ids;
    j["validation_skipped"] = a.skip_validation;
    j["pruning"] = {{"removed_users", in.removed_users}, {"dropped_rows", in.dropped_rows}};
    j["em"] = {{"max_iterations", a.em.max_iterations},
               {"tolerance", a.em.tolerance},
               {"n_restarts", a.em.n_restarts},
               {"clamp_epsilon", a.em.clamp_epsilon},
               {"seed", a.em.seed}};
    io::write_file(a.out, j.dump(2) + "\n");
    std::cout << "loglik " << io::format_double(fit.final_loglik(), 10) << " after "
              << fit.iterations << " iterations (restart " << fit.restart_index << ", "
              << (fit.converged ? "converged" : "not converged") << ")\n";
    return kExitOk;
}

int cmd_impute(const ImputeArgs& a) {
    const auto lm = io::parse_matrix_csv(io::read_file(a.matrix));

    ImputationResult result;
    std::vector<std::string> ids;
    std::vector<std::string> dropped;
    if (a.mv) {
        result = impute_mv(lm.matrix);
        ids = lm.utterance_ids;
    } else {
        const json fj = io::read_json(a.fit);
        const FitResult fit = io::fit_from_json(fj);
        const bool skipped = fj.value("validation_skipped", false);
        FitInput in = prepare_fit_input(lm, skipped);
        if (fj.contains("utterance_ids") &&
            fj.at("utterance_ids").get<std::vector<std::string>>() != in.utterance_ids)
            throw ContractError("fit rows do not match the matrix rows");
        result = impute_lca_sm(fit, in.matrix);
        ids = std::move(in.utterance_ids);
        dropped = std::move(in.dropped_rows);
    }

    io::write_file(a.out, io::imputation_csv(result, ids));

    json side{{"method", to_string(result.method)},
              {"n_utterances", result.labels.size()},
              {"n_ties", result.tie_rows.size()},
              {"dropped_utterances", dropped}};
    if (result.safe_cluster) {
        side["safe_cluster"] = to_string(*result.safe_cluster);
        side["cluster_size_tie"] = result.cluster_size_tie;
        side["safe_cluster_share"] = *result.safe_cluster_share;
    }

    if (!a.gold.empty()) {
        std::map<std::string, Label> gold_by_id;
        for (auto& [id, label] : io::parse_gold_csv(io::read_file(a.gold))) gold_by_id[id] = label;
        std::vector<Label> gold;
        for (const auto& id : ids) {
            const auto it = gold_by_id.find(id);
            if (it == gold_by_id.end())
                throw ContractError("gold file has no label for utterance '" + id + "'");
            gold.push_back(it->second);
        }
        const double acc = imputation_accuracy(result, gold);
        side["imputation_accuracy"] = acc;
        std::cout << "imputation_accuracy " << io::format_shortest(acc) << "\n";
    }
    io::write_file(a.out + ".json", side.dump(2) + "\n");
    return kExitOk;
}

void print_summaries(const std::vector<ScenarioSummary>& summaries) {
    for (const auto& s : summaries) {
        std::cout << s.scenario.id() << "  runs=" << s.n_runs << " unfittable=" << s.n_unfittable
                  << "  lca=" << io::format_double(s.lca.mean, 4)
                  << "  mv=" << io::format_double(s.mv.mean, 4)
                  << "  win=" << io::format_double(s.win_rate, 3)
                  << "  all_safe=" << io::format_shortest(s.all_safe_baseline) << "\n";
    }
}

int cmd_experiment(const ExperimentArgs& a) {
    io::GridConfig grid = io::grid_from_json(io::read_json(a.grid));
    if (a.runs) grid.runs = *a.runs;
    if (grid.runs < 1) throw ContractError("--runs must be >= 1");

    const auto start = std::chrono::steady_clock::now();
    HarnessOptions options;
    options.jobs = a.jobs;
    auto records = run_grid(grid.scenarios, grid.runs, grid.grid_seed, options);
    sort_records(records);
    const auto summaries = summarize(records);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    const fs::path target(a.out);
    const fs::path staging = staging_dir_for(target);
    try {
        emit_report(summaries, records, staging,
                    ReportMetadata{grid.grid_seed, a.grid, grid.runs, a.jobs, ms});
        publish_dir(staging, target);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
    print_summaries(summaries);
    std::cout << records.size() << " runs in " << io::format_double(ms / 1000.0, 4) << " s\n";
    return kExitOk;
}

int cmd_report(const ReportArgs& a) {
    auto records = parse_runs_csv(io::read_file(a.runs));
    if (records.empty()) throw ContractError("runs.csv has no records");
    sort_records(records);
    const auto summaries = summarize(records);
    const fs::path target(a.out);
    const fs::path staging = staging_dir_for(target);
    try {
        emit_report(summaries, records, staging, ReportMetadata{std::nullopt, a.runs, 0, 0, 0.0});
        publish_dir(staging, target);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
    print_summaries(summaries);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"De-troll crowd-labeled binary data with two-cluster latent class analysis"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate one crowd-labeling run");
    simulate->add_option("--scenario", sim.scenario, "Scenario JSON file")->required();
    simulate->add_option("--seed", sim.seed, "RNG seed")->required();
    simulate->add_option("--out", sim.out, "Output directory for matrix/gold/roles CSVs")->required();

    FitArgs fit;
    auto* fitc = app.add_subcommand("fit", "Fit the two-cluster LCA to a matrix CSV");
    fitc->add_option("--matrix", fit.matrix, "Matrix CSV (utterance_id,user_id,label)")->required();
    fitc->add_option("--restarts", fit.em.n_restarts, "Random EM restarts")->capture_default_str();
    fitc->add_option("--tol", fit.em.tolerance, "Log-likelihood change tolerance")->capture_default_str();
    fitc->add_option("--max-iters", fit.em.max_iterations, "EM iteration cap")->capture_default_str();
    fitc->add_option("--seed", fit.em.seed, "Seed for random initializations")->capture_default_str();
    fitc->add_flag("--skip-validation", fit.skip_validation,
                   "Fit without enforcing the row-count and both-labels requirements");
    fitc->add_option("--out", fit.out, "Output FitResult JSON path")->required();

    ImputeArgs imp;
    auto* impute = app.add_subcommand("impute", "Impute labels by LCA+SM or majority vote");
    impute->add_option("--matrix", imp.matrix, "Matrix CSV")->required();
    auto* fit_opt = impute->add_option("--fit", imp.fit, "FitResult JSON from `fit`");
    auto* mv_opt = impute->add_flag("--mv", imp.mv, "Use majority vote instead of a fit");
    fit_opt->excludes(mv_opt);
    impute->add_option("--gold", imp.gold, "Gold labels CSV (utterance_id,label)");
    impute->add_option("--out", imp.out, "Output imputation CSV")->required();

    ExperimentArgs exp;
    auto* experiment = app.add_subcommand("experiment", "Run a Monte-Carlo scenario grid");
    experiment->add_option("--grid", exp.grid, "Grid config JSON")->required();
    experiment->add_option("--runs", exp.runs, "Override runs per scenario");
    experiment->add_option("--jobs", exp.jobs, "Worker threads (1 = sequential reference order)")
        ->capture_default_str();
    experiment->add_option("--out", exp.out, "Output report directory")->required();

    ReportArgs rep;
    auto* report = app.add_subcommand("report", "Re-summarize an existing runs.csv");
    report->add_option("--runs", rep.runs, "runs.csv from a previous experiment")->required();
    report->add_option("--out", rep.out, "Output report directory")->required();

    try {
        app.parse(argc, argv);
        if (*impute && !*fit_opt && !imp.mv)
            throw CLI::ValidationError("impute", "one of --fit or --mv is required");
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitContract;
    }

    try {
        if (*simulate) return cmd_simulate(sim);
        if (*fitc) return cmd_fit(fit);
        if (*impute) return cmd_impute(imp);
        if (*experiment) return cmd_experiment(exp);
        if (*report) return cmd_report(rep);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitContract;
    }
    return kExitContract;
}
