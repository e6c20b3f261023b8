// Experiment runner for the adaptive-collocation PINN laboratory.
//
// Subcommands: run, compare, verify-oracle, sample-demo, export-heatmap.
// Exit codes: 0 success, 1 validation error, 2 numeric failure,
// 3 acceptance/verification failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "rpinn/experiment.hpp"

namespace {

using namespace rpinn;

experiment::ExperimentConfig load_with_overrides(const std::string& config_path,
                                                 const experiment::CliOverrides& overrides) {
    experiment::ExperimentConfig cfg = experiment::load_config(config_path);
    experiment::apply_overrides(cfg, overrides);
    return cfg;
}

void add_override_options(CLI::App* cmd, experiment::CliOverrides& overrides) {
    cmd->add_option("--method", overrides.method, "sampler method: none|asm1|asm2|asm3");
    cmd->add_option("--rf", overrides.refinement_factor, "refinement factor");
    cmd->add_option("--epochs", overrides.epochs, "training epochs");
    cmd->add_option("--period", overrides.resample_period, "resampling period in epochs");
    cmd->add_option("--points-per-event", overrides.points_per_event,
                    "new points added per resampling event");
    cmd->add_option("--lr", overrides.learning_rate, "adam learning rate");
    cmd->add_option("--seeds", overrides.seeds, "seed list override");
    cmd->add_option("--output", overrides.output_dir, "output directory override");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive-collocation PINN laboratory"};
    app.require_subcommand(1);

    std::string config_path = "configs/full.json";
    experiment::CliOverrides overrides;

    CLI::App* run = app.add_subcommand("run", "train the configured method for every seed");
    run->add_option("--config", config_path, "experiment config (json)");
    add_override_options(run, overrides);

    CLI::App* compare =
        app.add_subcommand("compare", "five-way comparative study: base, asm1, asm2, asm3a, asm3b");
    compare->add_option("--config", config_path, "experiment config (json)");
    add_override_options(compare, overrides);

    CLI::App* verify = app.add_subcommand("verify-oracle",
                                          "finite-difference oracle convergence and probe checks");
    verify->add_option("--config", config_path, "experiment config (json)");

    int demo_rf = 2;
    std::uint64_t demo_seed = 1;
    std::string demo_output = "sample_demo.csv";
    CLI::App* demo = app.add_subcommand("sample-demo",
                                        "refine one sampled parent and export the children");
    demo->add_option("--rf", demo_rf, "refinement factor (>= 2)");
    demo->add_option("--seed", demo_seed, "rng seed");
    demo->add_option("--output", demo_output, "csv output path");

    std::string checkpoint_path, heatmap_dir = "heatmaps";
    CLI::App* heatmap = app.add_subcommand("export-heatmap",
                                           "residual / concentration heat maps for a checkpoint");
    heatmap->add_option("--config", config_path, "experiment config (json)");
    heatmap->add_option("--checkpoint", checkpoint_path, "network checkpoint")->required();
    heatmap->add_option("--output", heatmap_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto cfg = load_with_overrides(config_path, overrides);
            const auto outcomes = experiment::cmd_run(cfg);
            for (const auto& outcome : outcomes)
                std::printf("%s seed=%llu rel_l2=%.6e r2_outlet=%.6f -> %s\n",
                            outcome.method_label.c_str(),
                            static_cast<unsigned long long>(outcome.seed), outcome.relative_l2,
                            outcome.r_squared_outlet, outcome.run_dir.c_str());
        } else if (compare->parsed()) {
            const auto cfg = load_with_overrides(config_path, overrides);
            const auto result = experiment::cmd_compare(cfg);
            std::cout << experiment::format_compare_table(result);
            std::cout << "artifacts under " << cfg.output_dir << "\n";
        } else if (verify->parsed()) {
            const auto cfg = experiment::load_config(config_path);
            const auto report = experiment::cmd_verify_oracle(cfg);
            std::printf("diffusion probe error at configured resolution: %.3e (gate 1e-4)\n",
                        report.probe_error_default);
            for (std::size_t k = 0; k < report.errors.size(); ++k)
                std::printf("  cells=%-6d error=%.6e\n", report.resolutions[k], report.errors[k]);
            std::printf("measured convergence order: %.3f (gate [1.7, 2.3])\n",
                        report.convergence_order);
            std::printf("%s\n", report.passed ? "PASS" : "FAIL");
            if (!report.passed) return 3;
        } else if (demo->parsed()) {
            const std::string path = experiment::cmd_sample_demo(demo_rf, demo_seed, demo_output);
            std::printf("wrote %s (1 parent, %d children)\n", path.c_str(), demo_rf - 1);
        } else if (heatmap->parsed()) {
            const auto cfg = experiment::load_config(config_path);
            experiment::cmd_export_heatmap(cfg, checkpoint_path, heatmap_dir);
            std::printf("wrote heat maps under %s\n", heatmap_dir.c_str());
        }
    } catch (const rpinn::ConfigError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 1;
    } catch (const rpinn::DomainError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 1;
    } catch (const rpinn::NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
