#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gaitopt/benchgen.hpp"
#include "gaitopt/bo.hpp"
#include "gaitopt/config.hpp"

namespace gaitopt {

/// One benchmark column: a BO configuration, the uniform-random baseline,
/// or (test hook) a scripted proposal sequence.
struct SuiteConfig {
    std::string name;
    BoConfig bo{};
    bool random_baseline = false;
    /// When set, proposals come from this callback instead of the optimizer
    /// (iteration is 1-based). Used by oracle-injection tests.
    std::function<ControllerParams(int iteration, const CostSurface& surface)>
        proposal_stub;
};

/// Parse "<kernel>-<acq>-<signal>-<hypermode>" (e.g. "2mat-ei-sf1-learned")
/// or "random". Rejects the unsupported es+learned combination.
SuiteConfig suite_config_from_name(const std::string& name);

/// The 34 kernel/acquisition/signal/hyper-mode cells of the standard
/// comparison table (2mat-es-sf1-fixed is intentionally absent).
std::vector<std::string> table_config_names();

struct BenchmarkSuite {
    std::vector<SuiteConfig> configs;
    int runs = 200;
    int budget = 20;
    std::uint64_t master_seed = 1;
    /// Target speed used when synthesizing the default source grid.
    double v_star = 4.0;
    /// Observed cells kept when synthesizing the default source grid.
    std::size_t observed_cells = 56;
    /// Sparse source grid; empty -> synthesized from the default plant.
    GridData grid{};
    double surface_floor = 1e-3;
    int threads = 0; ///< 0 = hardware concurrency
    bool timing = false;

    void validate() const;
};

/// All table cells plus the random baseline.
BenchmarkSuite default_suite(std::uint64_t master_seed = 1);
/// Just the headline configuration and the random baseline.
BenchmarkSuite headline_suite(std::uint64_t master_seed = 1);

/// Suite from a flat key-value config file. Keys: suite (table|headline),
/// configs (comma-separated names, overrides suite), runs, budget, seed,
/// threads, v_star, observed, noise_std, floor, timing, grid_csv.
BenchmarkSuite suite_from_kv(const KeyValueDoc& doc);

struct ConfigStats {
    std::string name;
    double median_regret = 0.0;
    double p95_regret = 0.0;
    std::vector<double> iteration_median; ///< median regret per iteration
    std::vector<double> final_regrets;    ///< per run, at the final iteration
};

struct BenchmarkReport {
    std::vector<ConfigStats> configs;
    int runs = 0;
    int budget = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t source_hash = 0; ///< smoothed source-grid fingerprint
};

/// Run every (config, run) pair on the shared per-run surface sequence.
/// When out_dir is non-empty, writes runlog-<config>-<run>.jsonl per pair
/// (atomically) and resumes from any complete logs already present.
BenchmarkReport run_benchmark(const BenchmarkSuite& suite,
                              const std::string& out_dir);

/// Emit report.csv, curves.csv, report.txt, and manifest.json.
void write_report_files(const BenchmarkReport& report,
                        const BenchmarkSuite& suite,
                        const std::string& out_dir);

/// Nearest-rank percentile: sorted[ceil(pct/100 * N) - 1].
double nearest_rank_percentile(std::vector<double> values, double pct);

/// Display cell "median (p95)" in percent, one decimal: 0.034/0.230 ->
/// "3.4 (23.0)".
std::string format_cell(double median_regret, double p95_regret);

struct ReportRow {
    std::string name;
    double median_regret = 0.0;
    double p95_regret = 0.0;
};
/// Re-parse report.csv (full precision round trip).
std::vector<ReportRow> load_report_csv(const std::string& path);

} // namespace gaitopt
