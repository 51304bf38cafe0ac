#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detroll/lca.hpp"
#include "detroll/troll_sim.hpp"

namespace detroll {

struct RunRecord {
    Scenario scenario;
    std::size_t run_index = 0;
    std::uint64_t seed = 0;
    std::optional<double> acc_lca_sm;  // absent when the run was unfittable
    double acc_mv = 0.0;
    bool lca_converged = false;
    std::size_t lca_restart_winner = 0;
    std::size_t pruned_users = 0;
    std::size_t dropped_rows = 0;
    double wall_time_ms = 0.0;
    // Diagnostics across every EM restart of this run.
    std::size_t n_fits = 0;
    double max_loglik_decrease = 0.0;
    std::string error;  // non-empty when LCA failed for a reason other than pruning
};

struct HarnessOptions {
    EmConfig em;          // em.seed is replaced per run by the run seed
    std::size_t jobs = 1; // worker threads; results are independent of this
};

RunRecord run_single(const Scenario& scenario, std::size_t run_index,
                     std::uint64_t grid_seed, const EmConfig& em);

std::vector<RunRecord> run_scenario(const Scenario& scenario, std::size_t runs,
                                    std::uint64_t grid_seed,
                                    const HarnessOptions& options = {});

std::vector<RunRecord> run_grid(std::span<const Scenario> grid, std::size_t runs,
                                std::uint64_t grid_seed,
                                const HarnessOptions& options = {});

// Orders records by scenario id, then run index.
void sort_records(std::vector<RunRecord>& records);

struct AccuracyStats {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation, 0 for a single run
    double min = 0.0;
    double max = 0.0;
};

struct ScenarioSummary {
    Scenario scenario;
    std::size_t n_runs = 0;
    std::size_t n_unfittable = 0;
    AccuracyStats lca;  // over runs with a defined LCA accuracy
    AccuracyStats mv;   // over all runs
    double win_rate = 0.0;
    double tie_rate = 0.0;
    double loss_rate = 0.0;
    double all_safe_baseline = 0.0;
};

// One summary per distinct scenario, ordered by scenario id.
std::vector<ScenarioSummary> summarize(std::span<const RunRecord> records);

struct ReportMetadata {
    std::optional<std::uint64_t> grid_seed;  // unknown when re-summarizing a runs.csv
    std::string source;                      // input the records came from, if any
    std::size_t runs = 0;
    std::size_t jobs = 1;
    double total_wall_time_ms = 0.0;
};

std::string runs_csv(std::span<const RunRecord> records);
std::string summary_csv(std::span<const ScenarioSummary> summaries);
std::string scatter_csv(std::span<const RunRecord> records, const Scenario& scenario);

// Writes runs.csv, summary.csv, scatter_<id>.csv per scenario and
// manifest.json into output_dir.
void emit_report(std::span<const ScenarioSummary> summaries,
                 std::span<const RunRecord> records,
                 const std::filesystem::path& output_dir,
                 const ReportMetadata& meta);

// Parses runs.csv back into records (scenario recovered from scenario_id).
std::vector<RunRecord> parse_runs_csv(const std::string& text);

}  // namespace detroll
