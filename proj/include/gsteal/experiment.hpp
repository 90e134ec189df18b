#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gsteal/attack.hpp"
#include "gsteal/graph.hpp"
#include "gsteal/metrics.hpp"
#include "gsteal/model.hpp"
#include "gsteal/oracle.hpp"

namespace gsteal {

struct DatasetSpec {
    std::string kind = "synthetic";  // "synthetic" | "tu"
    // synthetic
    int n_graphs = 800;
    std::uint64_t seed = 41;
    MotifParams motif;
    // tu
    std::string tu_dir;
    std::string tu_name;
};

// One experiment is a pure function of this config; seeds fan out into
// independent cells (method x seed). The run seed overrides the split,
// target and attack seeds; the dataset seed stays fixed so all runs see the
// same benchmark data.
struct ExperimentConfig {
    DatasetSpec dataset;
    SplitSpec split;
    ModelConfig target;
    int target_epochs = 200;
    int target_batch = 64;
    ExplainerKind explainer = ExplainerKind::GraphCAM;
    bool oracle_probs = true;
    AttackConfig attack;
    std::vector<std::string> methods = {"TS", "full"};
    std::vector<std::uint64_t> seeds = {41, 42, 43, 44, 45};
    double budget_fraction = 0.30;
    long budget_absolute = -1;  // >= 0 overrides the fraction
    std::string output_dir = "results/exp";
    int jobs = 0;       // 0: hardware concurrency
    bool wire = false;  // serve the oracle over loopback TCP per cell
    std::optional<DatasetSpec> cross_shadow;  // cross-dist subcommand
};

ExperimentConfig load_experiment_config(const std::string& path);
void apply_config_json(ExperimentConfig& config, const std::string& json_text);

Dataset prepare_dataset(const DatasetSpec& spec);

// Known method names: TS, MSE-align, no-aug, no-align, full.
AttackConfig method_attack_config(const ExperimentConfig& config,
                                  const std::string& method);

// Surrogate-vs-target metrics on a test split. The target is explained with
// `target_explainer`; the surrogate always explains itself with Graph-CAM.
EvalResult evaluate_surrogate(const ModelState& target, const ModelState& surrogate,
                              const Dataset& test, ExplainerKind target_explainer);

struct SeedContext {
    std::uint64_t seed = 0;
    SplitResult splits;
    ModelState target;
    double target_val_auc = 0.0;
    double target_test_auc = 0.0;
};

struct PreparedExperiment {
    Dataset dataset;
    std::vector<SeedContext> seeds;
};

// Prepares data and trains one target per seed (in parallel). Writes the
// target models and reports under output_dir when write_artifacts is true.
PreparedExperiment prepare_experiment(const ExperimentConfig& config,
                                      bool write_artifacts = true);

struct CellResult {
    std::string method;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    EvalResult metrics;
};

struct ExperimentResult {
    std::vector<CellResult> cells;
    std::vector<double> target_test_auc;              // per seed
    std::map<std::string, EvalReport> by_method;      // aggregated
    double target_auc_mean = 0.0;
    bool all_ok = false;
};

// Runs every (method, seed) cell against prepared targets and writes
// report.json, surrogate model and training dump per cell plus summary.csv.
ExperimentResult run_prepared(const ExperimentConfig& config,
                              const PreparedExperiment& prepared,
                              const std::string& output_dir,
                              bool write_artifacts = true);

ExperimentResult run_experiment(const ExperimentConfig& config);

// Repeats the experiment for each budget fraction; emits a long-format
// sweep.csv (fraction, method, metric, mean, std) for plotting.
std::map<double, ExperimentResult> sweep_budget(const ExperimentConfig& config,
                                                const std::vector<double>& fractions);

struct CrossDistResult {
    double mmd_squared = 0.0;
    ExperimentResult result;
};

// Swaps the shadow pool for an out-of-distribution dataset, padding features
// when widths differ, and records the structural MMD between the override
// shadow and the target training pool.
CrossDistResult cross_distribution(const ExperimentConfig& config,
                                   const DatasetSpec& shadow_spec);

// Rebuilds summary.csv from the per-cell report.json files under dir.
void rebuild_summary(const std::string& dir);

}  // namespace gsteal
