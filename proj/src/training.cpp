#include "rpinn/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace rpinn::training {

using Clock = std::chrono::steady_clock;

namespace {
double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}
}  // namespace

void AdamConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("adam.learning_rate must be >= 0");
    if (beta1 < 0.0 || beta1 >= 1.0) throw ConfigError("adam.beta1 must lie in [0, 1)");
    if (beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("adam.beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("adam.epsilon must be > 0");
}

AdamState AdamState::fresh(const diffnet::NetworkConfig& net, const AdamConfig& cfg) {
    cfg.validate();
    AdamState state;
    state.first_moment = diffnet::zero_gradient(net);
    state.second_moment = diffnet::zero_gradient(net);
    state.config = cfg;
    return state;
}

void adam_step(diffnet::NetworkParams& params, const diffnet::ParamGradient& grad,
               AdamState& state) {
    if (!params.congruent_with(grad) || !params.congruent_with(state.first_moment))
        throw ConfigError("adam_step shapes are not congruent");
    if (!grad.all_finite()) throw NumericError("adam_step received a non-finite gradient");

    state.step += 1;
    const AdamConfig& c = state.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
            m = c.beta1 * m + (1.0 - c.beta1) * g;
            v = (c.beta2 * v.array() + (1.0 - c.beta2) * g.array().square()).matrix();
            theta -= (c.learning_rate * (m.array() / bc1) /
                      ((v.array() / bc2).sqrt() + c.epsilon))
                         .matrix();
        };
        update(params.weights[l], grad.weights[l], state.first_moment.weights[l],
               state.second_moment.weights[l]);
        update(params.biases[l], grad.biases[l], state.first_moment.biases[l],
               state.second_moment.biases[l]);
    }
    if (!params.all_finite()) throw NumericError("adam_step produced non-finite parameters");
}

void CollocationConfig::validate() const {
    if (grid_t_count < 2 || grid_x_count < 2)
        throw ConfigError("collocation grid needs at least 2 nodes per axis");
    if (inlet_count < 1 || outlet_count < 1 || initial_count < 1)
        throw ConfigError("collocation boundary/initial counts must be >= 1");
}

void PdeSetup::validate() const {
    props.validate();
    domain.validate();
    inlet.validate();
    weights.validate();
    colloc.validate();
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("training.epochs must be >= 1");
    if (resample_period < 1) throw ConfigError("training.resample_period must be >= 1");
    if (log_every < 1) throw ConfigError("training.log_every must be >= 1");
    sampler.validate();
    adam.validate();
}

namespace {

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> v(static_cast<std::size_t>(count));
    if (count == 1) {
        v[0] = lo;
        return v;
    }
    for (int i = 0; i < count; ++i)
        v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
    v.back() = hi;
    return v;
}

std::vector<std::pair<double, double>> grid_points(const sampling::ReferenceGrid& grid) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) pts.push_back(grid.point(i));
    return pts;
}

}  // namespace

TrainResult train(const diffnet::NetworkConfig& net_config, const PdeSetup& setup,
                  const TrainConfig& cfg, const diffnet::NetworkParams* initial_params) {
    net_config.validate();
    setup.validate();
    cfg.validate();

    const auto start = Clock::now();
    TrainResult result;
    result.grid =
        sampling::build_reference_grid(setup.domain, setup.colloc.grid_t_count,
                                       setup.colloc.grid_x_count);
    result.inlet_times = linspace(0.0, setup.domain.t_max, setup.colloc.inlet_count);
    result.outlet_times = linspace(0.0, setup.domain.t_max, setup.colloc.outlet_count);
    result.initial_positions =
        linspace(setup.domain.x_min, setup.domain.x_max, setup.colloc.initial_count);

    result.params = initial_params ? *initial_params
                                   : diffnet::init_params(net_config, cfg.sampler.seed);
    if (initial_params) {
        if (!result.params.congruent_with(diffnet::zero_gradient(net_config)))
            throw ConfigError("initial parameters do not match the network architecture");
        if (!result.params.all_finite())
            throw NumericError("initial parameters contain non-finite entries");
    }

    const std::vector<std::pair<double, double>> base_interior = grid_points(result.grid);

    Rng sampler_rng(cfg.sampler.seed);
    AdamState adam = AdamState::fresh(net_config, cfg.adam);

    // Batches currently contributing points to the active set (indices into
    // result.batches). ASM3 keeps only the newest batch; ASM1/ASM2 keep all
    // of them.
    std::vector<std::size_t> active_batches;
    std::size_t accumulated_points = 0;

    auto rebuild_spec = [&](pde::CollocationSet& points) {
        points.interior = base_interior;
        for (std::size_t bi : active_batches) {
            const auto& refined = result.batches[bi].refined_points;
            points.interior.insert(points.interior.end(), refined.begin(), refined.end());
        }
        points.inlet_times = result.inlet_times;
        points.outlet_times = result.outlet_times;
        points.initial_positions = result.initial_positions;
        return pde::build_loss_spec(setup.props, setup.domain, setup.inlet, setup.weights,
                                    points);
    };

    pde::CollocationSet points;
    diffnet::LossSpec spec = rebuild_spec(points);

    const auto make_residual_field = [&]() {
        const pde::JetProvider provider =
            pde::make_network_provider(result.params, net_config);
        return metrics::residual_field_on(base_interior, provider, setup.props);
    };

    int event_index = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const bool event_due = cfg.sampler.method != sampling::Method::None &&
                               epoch % cfg.resample_period == 0 &&
                               (epoch > 0 || cfg.resample_at_epoch_zero);
        if (event_due) {
            const auto event_start = Clock::now();
            EventRecord record;
            record.event_index = ++event_index;
            record.epoch = epoch;

            sampling::SampleBatch batch;
            switch (cfg.sampler.method) {
                case sampling::Method::Asm1:
                case sampling::Method::Asm3: {
                    sampling::ResidualField residuals = make_residual_field();
                    try {
                        batch = cfg.sampler.method == sampling::Method::Asm1
                                    ? sampling::asm1_select(result.grid, residuals, cfg.sampler,
                                                            sampler_rng)
                                    : sampling::asm3_resample(result.grid, residuals, cfg.sampler,
                                                              setup.domain, sampler_rng);
                    } catch (const DegenerateDistributionError&) {
                        // all-zero residual field: fall back to uniform
                        // parent sampling (unit residuals give a uniform pmf)
                        sampling::ResidualField uniform;
                        uniform.values.assign(residuals.values.size(), 1.0);
                        batch = cfg.sampler.method == sampling::Method::Asm1
                                    ? sampling::asm1_select(result.grid, uniform, cfg.sampler,
                                                            sampler_rng)
                                    : sampling::asm3_resample(result.grid, uniform, cfg.sampler,
                                                              setup.domain, sampler_rng);
                        record.pmf_fallback = true;
                        result.warnings.push_back(
                            "event " + std::to_string(record.event_index) +
                            ": degenerate residual pmf, fell back to uniform parent sampling");
                    }
                    break;
                }
                case sampling::Method::Asm2: {
                    const pde::JetProvider provider =
                        pde::make_network_provider(result.params, net_config);
                    const auto evaluator = [&](double t, double x) {
                        return std::abs(pde::pde_residual(provider, setup.props, t, x));
                    };
                    batch = sampling::asm2_select(setup.domain, evaluator, cfg.sampler,
                                                  sampler_rng);
                    break;
                }
                case sampling::Method::None:
                    break;
            }
            batch.event_index = record.event_index;
            result.batches.push_back(std::move(batch));

            if (!cfg.sampler.accumulates()) {
                active_batches.clear();
                accumulated_points = 0;
            }
            active_batches.push_back(result.batches.size() - 1);
            accumulated_points += result.batches.back().refined_points.size();
            spec = rebuild_spec(points);

            record.sampling_seconds = seconds_since(event_start);
            record.parents = result.batches.back().parent_indices.size();
            record.children = result.batches.back().refined_points.size();
            record.active_interior_after = points.interior.size();
            if (points.interior.size() != base_interior.size() + accumulated_points)
                throw NumericError("active interior count diverged from the accumulation policy");
            result.events.push_back(record);
        }

        if (cfg.dry_run) continue;

        const diffnet::LossAndGradient lg =
            diffnet::loss_gradient(result.params, net_config, spec);
        adam_step(result.params, lg.grad, adam);

        if (epoch % cfg.log_every == 0 || epoch + 1 == cfg.epochs) {
            TrainLogRow row;
            row.epoch = epoch;
            row.total_loss = lg.loss.total;
            row.pde_loss = lg.loss.by_group[pde::kPde];
            row.inlet_loss = lg.loss.by_group[pde::kInlet];
            row.outlet_loss = lg.loss.by_group[pde::kOutlet];
            row.initial_loss = lg.loss.by_group[pde::kInitial];
            row.active_interior = points.interior.size();
            row.wall_seconds = seconds_since(start);
            result.log.push_back(row);
        }
    }

    result.train_seconds = seconds_since(start);
    return result;
}

void write_trainlog_csv(const std::string& path, const std::vector<TrainLogRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot open train log for writing: " + path);
    f << "epoch,total_loss,pde_loss,inlet_loss,outlet_loss,initial_loss,active_interior,"
         "wall_seconds\n";
    for (const auto& row : rows)
        f << join_csv_row({std::to_string(row.epoch), format_double(row.total_loss),
                           format_double(row.pde_loss), format_double(row.inlet_loss),
                           format_double(row.outlet_loss), format_double(row.initial_loss),
                           std::to_string(row.active_interior),
                           format_double(row.wall_seconds)});
    if (!f) throw NumericError("train log write failed: " + path);
}

}  // namespace rpinn::training
