#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rpinn/diffnet.hpp"
#include "rpinn/fdsolver.hpp"
#include "rpinn/metrics.hpp"
#include "rpinn/pde.hpp"
#include "rpinn/sampling.hpp"

namespace rpinn::training {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

struct AdamState {
    diffnet::NetworkParams first_moment;
    diffnet::NetworkParams second_moment;
    long step = 0;
    AdamConfig config;

    static AdamState fresh(const diffnet::NetworkConfig& net, const AdamConfig& cfg);
};

// Standard bias-corrected Adam update, applied in place.
void adam_step(diffnet::NetworkParams& params, const diffnet::ParamGradient& grad,
               AdamState& state);

// Fixed point budgets: the reference grid carries the interior residual
// terms, the three boundary/initial lists are equi-spaced and never
// resampled.
struct CollocationConfig {
    int grid_t_count = 21;
    int grid_x_count = 21;
    int inlet_count = 101;
    int outlet_count = 101;
    int initial_count = 101;

    void validate() const;
};

struct PdeSetup {
    pde::MediumProperties props;
    pde::DomainSpec domain;
    pde::InletPulseSpec inlet;
    pde::LossWeights weights;
    CollocationConfig colloc;

    void validate() const;
};

struct TrainConfig {
    int epochs = 15000;
    int resample_period = 1000;
    sampling::SamplerConfig sampler;
    AdamConfig adam;
    int log_every = 100;
    bool resample_at_epoch_zero = false;
    // Protocol-only mode: resampling events run, gradient updates do not.
    bool dry_run = false;

    void validate() const;
};

struct TrainLogRow {
    int epoch = 0;
    double total_loss = 0.0;
    double pde_loss = 0.0;
    double inlet_loss = 0.0;
    double outlet_loss = 0.0;
    double initial_loss = 0.0;
    std::size_t active_interior = 0;
    double wall_seconds = 0.0;
};

struct EventRecord {
    int event_index = 0;
    int epoch = 0;
    double sampling_seconds = 0.0;
    std::size_t parents = 0;
    std::size_t children = 0;
    std::size_t active_interior_after = 0;
    bool pmf_fallback = false;
};

struct TrainResult {
    diffnet::NetworkParams params;
    std::vector<TrainLogRow> log;
    std::vector<sampling::SampleBatch> batches;
    std::vector<EventRecord> events;
    std::vector<std::string> warnings;
    sampling::ReferenceGrid grid;
    std::vector<double> inlet_times;
    std::vector<double> outlet_times;
    std::vector<double> initial_positions;
    double train_seconds = 0.0;
};

// Full-batch Adam loop with periodic adaptive resampling. Events fire at
// epochs e > 0 with e % resample_period == 0 (optionally also epoch 0); the
// active interior set is the reference grid plus the retained batches per
// the sampler's accumulation policy. A degenerate residual PMF falls back
// to uniform parent sampling with a logged warning.
TrainResult train(const diffnet::NetworkConfig& net_config, const PdeSetup& setup,
                  const TrainConfig& cfg,
                  const diffnet::NetworkParams* initial_params = nullptr);

void write_trainlog_csv(const std::string& path, const std::vector<TrainLogRow>& rows);

}  // namespace rpinn::training
