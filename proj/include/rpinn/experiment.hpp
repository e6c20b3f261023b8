#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rpinn/common.hpp"
#include "rpinn/diffnet.hpp"
#include "rpinn/fdsolver.hpp"
#include "rpinn/metrics.hpp"
#include "rpinn/training.hpp"

namespace rpinn::experiment {

struct MetricsSettings {
    int eval_t_count = 121;
    int eval_x_count = 101;

    void validate() const;
};

// Everything a reproducible run needs, loaded from one JSON tree. CLI flags
// override individual fields after loading.
struct ExperimentConfig {
    diffnet::NetworkConfig network;
    bool input_scale_given = false;  // otherwise derived from the domain
    training::PdeSetup setup;
    training::TrainConfig train;
    fdsolver::FdConfig oracle;
    MetricsSettings metrics;
    std::vector<std::uint64_t> seeds{1};
    std::string output_dir = "out";

    void validate() const;
    // effective network config with input scaling resolved against the domain
    diffnet::NetworkConfig resolved_network() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

struct CliOverrides {
    std::optional<std::string> method;
    std::optional<int> refinement_factor;
    std::optional<int> epochs;
    std::optional<int> resample_period;
    std::optional<int> points_per_event;
    std::optional<double> learning_rate;
    std::optional<std::vector<std::uint64_t>> seeds;
    std::optional<std::string> output_dir;
};

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& overrides);

struct RunOutcome {
    std::string method_label;
    std::uint64_t seed = 0;
    double relative_l2 = 0.0;
    double r_squared_outlet = 0.0;
    double final_total_loss = 0.0;
    std::size_t event_count = 0;
    std::size_t active_interior_final = 0;
    std::size_t repetition_total = 0;
    std::size_t repetition_max = 0;
    double train_seconds = 0.0;
    std::vector<double> event_sampling_seconds;
    std::string run_dir;
};

// Trains one (method, seed) pair against a shared oracle solution and writes
// checkpoint.bin, trainlog.csv, batches.csv, metrics.json and manifest.json
// under <output_dir>/<label>/seed_<seed>/.
RunOutcome run_single(const ExperimentConfig& cfg, const std::string& method_label,
                      sampling::Method method, int refinement_factor, std::uint64_t seed,
                      const fdsolver::FdSolution& oracle);

// `run` subcommand: the configured method, every seed.
std::vector<RunOutcome> cmd_run(const ExperimentConfig& cfg);

struct CompareRow {
    std::string method_label;
    double median_rel_l2 = 0.0;
    double min_rel_l2 = 0.0;
    double max_rel_l2 = 0.0;
    double median_r_squared = 0.0;
    double median_event_sampling_ms = 0.0;
    double median_train_seconds = 0.0;
};

struct CompareResult {
    std::vector<CompareRow> rows;  // base, asm1, asm2, asm3a, asm3b
    std::vector<RunOutcome> runs;
    std::string oracle_hash;
};

// Five-way comparative study against one shared oracle solve; writes
// comparison.csv and comparison.txt under output_dir.
CompareResult cmd_compare(const ExperimentConfig& cfg);

std::string format_compare_table(const CompareResult& result);

struct OracleReport {
    double probe_error_default = 0.0;
    double convergence_order = 0.0;
    std::vector<int> resolutions;
    std::vector<double> errors;
    bool passed = false;
};

OracleReport cmd_verify_oracle(const ExperimentConfig& cfg);

// Single-parent refinement demo; writes parent/children CSV for plotting.
std::string cmd_sample_demo(int refinement_factor, std::uint64_t seed,
                            const std::string& output_path);

void cmd_export_heatmap(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                        const std::string& output_dir);

double median(std::vector<double> values);

}  // namespace rpinn::experiment
