#include "rpinn/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>
#include <thread>

namespace rpinn::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

void MetricsSettings::validate() const {
    if (eval_t_count < 2 || eval_x_count < 2)
        throw ConfigError("metrics eval grid needs at least 2 nodes per axis");
}

void ExperimentConfig::validate() const {
    network.validate();
    setup.validate();
    train.validate();
    oracle.validate();
    metrics.validate();
    if (seeds.empty()) throw ConfigError("seeds must contain at least one entry");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

diffnet::NetworkConfig ExperimentConfig::resolved_network() const {
    diffnet::NetworkConfig net = network;
    if (!input_scale_given) {
        net.input_scale_t = 1.0 / setup.domain.t_max;
        net.input_scale_x = 1.0 / setup.domain.x_extent();
    }
    return net;
}

namespace {

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool known = false;
        for (const char* a : allowed)
            if (key == a) known = true;
        if (!known) throw ConfigError("unknown config field '" + section + "." + key + "'");
    }
}

template <typename T>
T field_or(const json& j, const std::string& section, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field '" + section + "." + key + "' has the wrong type");
    }
}

sampling::Method parse_method(const std::string& name) {
    if (name == "none") return sampling::Method::None;
    if (name == "asm1") return sampling::Method::Asm1;
    if (name == "asm2") return sampling::Method::Asm2;
    if (name == "asm3") return sampling::Method::Asm3;
    throw ConfigError("sampler.method must be one of none|asm1|asm2|asm3, got '" + name + "'");
}

std::string method_name(sampling::Method method) {
    switch (method) {
        case sampling::Method::None: return "none";
        case sampling::Method::Asm1: return "asm1";
        case sampling::Method::Asm2: return "asm2";
        case sampling::Method::Asm3: return "asm3";
    }
    return "none";
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid json: ") + e.what());
    }
    check_keys(root, "config",
               {"network", "medium", "domain", "inlet", "weights", "collocation", "sampler",
                "training", "oracle", "metrics", "seeds", "output_dir"});

    ExperimentConfig cfg;

    if (root.contains("network")) {
        const json& j = root["network"];
        check_keys(j, "network", {"layer_sizes", "activation", "input_scale"});
        cfg.network.layer_sizes =
            field_or(j, "network", "layer_sizes", cfg.network.layer_sizes);
        const std::string act = field_or<std::string>(j, "network", "activation", "sigmoid");
        if (act == "sigmoid") cfg.network.activation = diffnet::Activation::Sigmoid;
        else if (act == "tanh") cfg.network.activation = diffnet::Activation::Tanh;
        else throw ConfigError("network.activation must be sigmoid or tanh, got '" + act + "'");
        if (j.contains("input_scale")) {
            const auto scale = field_or<std::vector<double>>(j, "network", "input_scale", {});
            if (scale.size() != 2)
                throw ConfigError("network.input_scale must be a [t_scale, x_scale] pair");
            cfg.network.input_scale_t = scale[0];
            cfg.network.input_scale_x = scale[1];
            cfg.input_scale_given = true;
        }
    }
    if (root.contains("medium")) {
        const json& j = root["medium"];
        check_keys(j, "medium", {"porosity", "dispersivity", "velocity", "molecular_dispersion"});
        auto& p = cfg.setup.props;
        p.porosity = field_or(j, "medium", "porosity", p.porosity);
        p.dispersivity = field_or(j, "medium", "dispersivity", p.dispersivity);
        p.velocity = field_or(j, "medium", "velocity", p.velocity);
        p.molecular_dispersion =
            field_or(j, "medium", "molecular_dispersion", p.molecular_dispersion);
    }
    if (root.contains("domain")) {
        const json& j = root["domain"];
        check_keys(j, "domain", {"t_max", "x_min", "x_max"});
        cfg.setup.domain.t_max = field_or(j, "domain", "t_max", cfg.setup.domain.t_max);
        cfg.setup.domain.x_min = field_or(j, "domain", "x_min", cfg.setup.domain.x_min);
        cfg.setup.domain.x_max = field_or(j, "domain", "x_max", cfg.setup.domain.x_max);
    }
    if (root.contains("inlet")) {
        const json& j = root["inlet"];
        check_keys(j, "inlet", {"steepness", "rise_center", "fall_center", "literal_mode"});
        auto& in = cfg.setup.inlet;
        in.steepness = field_or(j, "inlet", "steepness", in.steepness);
        in.rise_center = field_or(j, "inlet", "rise_center", in.rise_center);
        in.fall_center = field_or(j, "inlet", "fall_center", in.fall_center);
        in.literal_mode = field_or(j, "inlet", "literal_mode", in.literal_mode);
    }
    if (root.contains("weights")) {
        const json& j = root["weights"];
        check_keys(j, "weights", {"pde", "inlet", "outlet", "initial"});
        auto& w = cfg.setup.weights;
        w.pde = field_or(j, "weights", "pde", w.pde);
        w.inlet = field_or(j, "weights", "inlet", w.inlet);
        w.outlet = field_or(j, "weights", "outlet", w.outlet);
        w.initial = field_or(j, "weights", "initial", w.initial);
    }
    if (root.contains("collocation")) {
        const json& j = root["collocation"];
        check_keys(j, "collocation",
                   {"grid_t_count", "grid_x_count", "inlet_count", "outlet_count",
                    "initial_count"});
        auto& c = cfg.setup.colloc;
        c.grid_t_count = field_or(j, "collocation", "grid_t_count", c.grid_t_count);
        c.grid_x_count = field_or(j, "collocation", "grid_x_count", c.grid_x_count);
        c.inlet_count = field_or(j, "collocation", "inlet_count", c.inlet_count);
        c.outlet_count = field_or(j, "collocation", "outlet_count", c.outlet_count);
        c.initial_count = field_or(j, "collocation", "initial_count", c.initial_count);
    }
    if (root.contains("sampler")) {
        const json& j = root["sampler"];
        check_keys(j, "sampler",
                   {"method", "points_per_event", "refinement_factor", "coefficient_policy",
                    "constant_lambda", "asm2_candidate_pool", "pmf_exponent", "pmf_offset",
                    "accumulate"});
        auto& s = cfg.train.sampler;
        s.method = parse_method(field_or<std::string>(j, "sampler", "method", "asm3"));
        s.points_per_event = field_or(j, "sampler", "points_per_event", s.points_per_event);
        s.refinement_factor = field_or(j, "sampler", "refinement_factor", s.refinement_factor);
        const std::string policy =
            field_or<std::string>(j, "sampler", "coefficient_policy", "random");
        if (policy == "random") s.coefficient_policy = sampling::CoefficientPolicy::Random;
        else if (policy == "constant") s.coefficient_policy = sampling::CoefficientPolicy::Constant;
        else
            throw ConfigError("sampler.coefficient_policy must be random or constant, got '" +
                              policy + "'");
        if (j.contains("constant_lambda")) {
            const auto lam = field_or<std::vector<double>>(j, "sampler", "constant_lambda", {});
            if (lam.size() != 2)
                throw ConfigError("sampler.constant_lambda must be a [lambda_t, lambda_x] pair");
            s.constant_lambda_t = lam[0];
            s.constant_lambda_x = lam[1];
        }
        s.asm2_candidate_pool = field_or(j, "sampler", "asm2_candidate_pool", s.asm2_candidate_pool);
        s.pmf.exponent = field_or(j, "sampler", "pmf_exponent", s.pmf.exponent);
        s.pmf.offset = field_or(j, "sampler", "pmf_offset", s.pmf.offset);
        if (j.contains("accumulate"))
            s.accumulate_override = field_or<bool>(j, "sampler", "accumulate", false) ? 1 : 0;
    }
    if (root.contains("training")) {
        const json& j = root["training"];
        check_keys(j, "training",
                   {"epochs", "resample_period", "log_every", "resample_at_epoch_zero",
                    "learning_rate", "beta1", "beta2", "epsilon"});
        auto& t = cfg.train;
        t.epochs = field_or(j, "training", "epochs", t.epochs);
        t.resample_period = field_or(j, "training", "resample_period", t.resample_period);
        t.log_every = field_or(j, "training", "log_every", t.log_every);
        t.resample_at_epoch_zero =
            field_or(j, "training", "resample_at_epoch_zero", t.resample_at_epoch_zero);
        t.adam.learning_rate = field_or(j, "training", "learning_rate", t.adam.learning_rate);
        t.adam.beta1 = field_or(j, "training", "beta1", t.adam.beta1);
        t.adam.beta2 = field_or(j, "training", "beta2", t.adam.beta2);
        t.adam.epsilon = field_or(j, "training", "epsilon", t.adam.epsilon);
    }
    if (root.contains("oracle")) {
        const json& j = root["oracle"];
        check_keys(j, "oracle", {"x_cells", "t_steps", "theta"});
        cfg.oracle.x_cells = field_or(j, "oracle", "x_cells", cfg.oracle.x_cells);
        cfg.oracle.t_steps = field_or(j, "oracle", "t_steps", cfg.oracle.t_steps);
        cfg.oracle.theta = field_or(j, "oracle", "theta", cfg.oracle.theta);
    }
    if (root.contains("metrics")) {
        const json& j = root["metrics"];
        check_keys(j, "metrics", {"eval_t_count", "eval_x_count"});
        cfg.metrics.eval_t_count = field_or(j, "metrics", "eval_t_count", cfg.metrics.eval_t_count);
        cfg.metrics.eval_x_count = field_or(j, "metrics", "eval_x_count", cfg.metrics.eval_x_count);
    }
    cfg.seeds = field_or(root, "config", "seeds", cfg.seeds);
    cfg.output_dir = field_or(root, "config", "output_dir", cfg.output_dir);

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << f.rdbuf();
    return config_from_json_text(buffer.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    const diffnet::NetworkConfig net = cfg.resolved_network();
    json root;
    root["network"] = {
        {"layer_sizes", cfg.network.layer_sizes},
        {"activation", cfg.network.activation == diffnet::Activation::Sigmoid ? "sigmoid" : "tanh"},
        {"input_scale", {net.input_scale_t, net.input_scale_x}},
    };
    root["medium"] = {
        {"porosity", cfg.setup.props.porosity},
        {"dispersivity", cfg.setup.props.dispersivity},
        {"velocity", cfg.setup.props.velocity},
        {"molecular_dispersion", cfg.setup.props.molecular_dispersion},
    };
    root["domain"] = {
        {"t_max", cfg.setup.domain.t_max},
        {"x_min", cfg.setup.domain.x_min},
        {"x_max", cfg.setup.domain.x_max},
    };
    root["inlet"] = {
        {"steepness", cfg.setup.inlet.steepness},
        {"rise_center", cfg.setup.inlet.rise_center},
        {"fall_center", cfg.setup.inlet.fall_center},
        {"literal_mode", cfg.setup.inlet.literal_mode},
    };
    root["weights"] = {
        {"pde", cfg.setup.weights.pde},
        {"inlet", cfg.setup.weights.inlet},
        {"outlet", cfg.setup.weights.outlet},
        {"initial", cfg.setup.weights.initial},
    };
    root["collocation"] = {
        {"grid_t_count", cfg.setup.colloc.grid_t_count},
        {"grid_x_count", cfg.setup.colloc.grid_x_count},
        {"inlet_count", cfg.setup.colloc.inlet_count},
        {"outlet_count", cfg.setup.colloc.outlet_count},
        {"initial_count", cfg.setup.colloc.initial_count},
    };
    const auto& s = cfg.train.sampler;
    root["sampler"] = {
        {"method", method_name(s.method)},
        {"points_per_event", s.points_per_event},
        {"refinement_factor", s.refinement_factor},
        {"coefficient_policy",
         s.coefficient_policy == sampling::CoefficientPolicy::Random ? "random" : "constant"},
        {"constant_lambda", {s.constant_lambda_t, s.constant_lambda_x}},
        {"asm2_candidate_pool", s.asm2_candidate_pool},
        {"pmf_exponent", s.pmf.exponent},
        {"pmf_offset", s.pmf.offset},
    };
    if (s.accumulate_override >= 0) root["sampler"]["accumulate"] = s.accumulate_override > 0;
    root["training"] = {
        {"epochs", cfg.train.epochs},
        {"resample_period", cfg.train.resample_period},
        {"log_every", cfg.train.log_every},
        {"resample_at_epoch_zero", cfg.train.resample_at_epoch_zero},
        {"learning_rate", cfg.train.adam.learning_rate},
        {"beta1", cfg.train.adam.beta1},
        {"beta2", cfg.train.adam.beta2},
        {"epsilon", cfg.train.adam.epsilon},
    };
    root["oracle"] = {
        {"x_cells", cfg.oracle.x_cells},
        {"t_steps", cfg.oracle.t_steps},
        {"theta", cfg.oracle.theta},
    };
    root["metrics"] = {
        {"eval_t_count", cfg.metrics.eval_t_count},
        {"eval_x_count", cfg.metrics.eval_x_count},
    };
    root["seeds"] = cfg.seeds;
    root["output_dir"] = cfg.output_dir;
    return root.dump(2) + "\n";
}

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& overrides) {
    if (overrides.method) cfg.train.sampler.method = parse_method(*overrides.method);
    if (overrides.refinement_factor)
        cfg.train.sampler.refinement_factor = *overrides.refinement_factor;
    if (overrides.epochs) cfg.train.epochs = *overrides.epochs;
    if (overrides.resample_period) cfg.train.resample_period = *overrides.resample_period;
    if (overrides.points_per_event)
        cfg.train.sampler.points_per_event = *overrides.points_per_event;
    if (overrides.learning_rate) cfg.train.adam.learning_rate = *overrides.learning_rate;
    if (overrides.seeds) cfg.seeds = *overrides.seeds;
    if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
    cfg.validate();
}

namespace {

std::vector<double> predicted_field(const diffnet::NetworkParams& params,
                                    const diffnet::NetworkConfig& net,
                                    const metrics::EvalGrid& grid) {
    std::vector<double> field(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto [t, x] = grid.point(i);
        field[i] = diffnet::forward(params, net, t, x);
    }
    return field;
}

std::vector<double> oracle_field(const fdsolver::FdSolution& oracle,
                                 const metrics::EvalGrid& grid) {
    std::vector<double> field(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto [t, x] = grid.point(i);
        field[i] = fdsolver::sample_at(oracle, t, x);
    }
    return field;
}

}  // namespace

RunOutcome run_single(const ExperimentConfig& cfg, const std::string& method_label,
                      sampling::Method method, int refinement_factor, std::uint64_t seed,
                      const fdsolver::FdSolution& oracle) {
    cfg.validate();
    const diffnet::NetworkConfig net = cfg.resolved_network();

    const fs::path run_dir = fs::path(cfg.output_dir) / method_label / ("seed_" + std::to_string(seed));
    if (fs::exists(run_dir / "metrics.json"))
        throw ConfigError("output directory already contains a finished run (" +
                          (run_dir / "metrics.json").string() +
                          "); partial-run resume is not supported, use a fresh output dir");
    fs::create_directories(run_dir);

    training::TrainConfig tc = cfg.train;
    tc.sampler.method = method;
    tc.sampler.refinement_factor = refinement_factor;
    tc.sampler.seed = splitmix64(seed ^ 0x73616d706c657221ull);

    const diffnet::NetworkParams init = diffnet::init_params(net, seed);
    const training::TrainResult trained = training::train(net, cfg.setup, tc, &init);

    const metrics::EvalGrid eval_grid =
        metrics::make_eval_grid(cfg.setup.domain, cfg.metrics.eval_t_count, cfg.metrics.eval_x_count);
    const std::vector<double> pred = predicted_field(trained.params, net, eval_grid);
    const std::vector<double> ref = oracle_field(oracle, eval_grid);

    RunOutcome outcome;
    outcome.method_label = method_label;
    outcome.seed = seed;
    outcome.relative_l2 = metrics::relative_l2(pred, ref);

    // breakthrough curve c(t, x_max) at the oracle's stored times
    std::vector<double> pred_outlet(oracle.times.size()), ref_outlet(oracle.times.size());
    const std::size_t last_col = oracle.nodes.size() - 1;
    for (std::size_t i = 0; i < oracle.times.size(); ++i) {
        pred_outlet[i] = diffnet::forward(trained.params, net, oracle.times[i],
                                          cfg.setup.domain.x_max);
        ref_outlet[i] = oracle.at(i, last_col);
    }
    outcome.r_squared_outlet = metrics::r_squared(pred_outlet, ref_outlet);

    outcome.final_total_loss = trained.log.empty() ? 0.0 : trained.log.back().total_loss;
    outcome.event_count = trained.events.size();
    outcome.active_interior_final =
        trained.events.empty() ? trained.grid.size() : trained.events.back().active_interior_after;
    const auto histogram = sampling::repetition_histogram(trained.batches);
    for (const auto& [idx, count] : histogram) {
        (void)idx;
        outcome.repetition_total += count;
        outcome.repetition_max = std::max(outcome.repetition_max, count);
    }
    outcome.train_seconds = trained.train_seconds;
    for (const auto& event : trained.events)
        outcome.event_sampling_seconds.push_back(event.sampling_seconds);
    outcome.run_dir = run_dir.string();

    diffnet::save_checkpoint((run_dir / "checkpoint.bin").string(), trained.params);
    training::write_trainlog_csv((run_dir / "trainlog.csv").string(), trained.log);
    sampling::write_batches_csv((run_dir / "batches.csv").string(), trained.batches,
                                trained.grid);

    json metrics_json;
    metrics_json["method"] = method_label;
    metrics_json["seed"] = seed;
    metrics_json["relative_l2"] = outcome.relative_l2;
    metrics_json["r_squared_outlet"] = outcome.r_squared_outlet;
    metrics_json["final_total_loss"] = outcome.final_total_loss;
    if (!trained.log.empty()) {
        metrics_json["final_losses"] = {
            {"pde", trained.log.back().pde_loss},
            {"inlet", trained.log.back().inlet_loss},
            {"outlet", trained.log.back().outlet_loss},
            {"initial", trained.log.back().initial_loss},
        };
    }
    metrics_json["event_count"] = outcome.event_count;
    metrics_json["active_interior_final"] = outcome.active_interior_final;
    metrics_json["repetition_total"] = outcome.repetition_total;
    metrics_json["repetition_max"] = outcome.repetition_max;
    metrics_json["eval_grid"] = {{"t_count", cfg.metrics.eval_t_count},
                                 {"x_count", cfg.metrics.eval_x_count}};
    metrics_json["oracle_hash"] = hash_hex(oracle.content_hash());
    {
        std::ofstream f(run_dir / "metrics.json", std::ios::trunc);
        f << metrics_json.dump(2) << "\n";
        if (!f) throw NumericError("metrics.json write failed");
    }

    const std::string resolved = config_to_json(cfg);
    json manifest;
    manifest["method"] = method_label;
    manifest["sampler_method"] = method_name(method);
    manifest["refinement_factor"] = refinement_factor;
    manifest["seed"] = seed;
    manifest["sampler_seed"] = tc.sampler.seed;
    manifest["config_hash"] = hash_hex(fnv1a64(resolved.data(), resolved.size()));
    manifest["oracle_hash"] = hash_hex(oracle.content_hash());
    manifest["resolved_config"] = json::parse(resolved);
    manifest["warnings"] = trained.warnings;
    manifest["timings"] = {
        {"train_seconds", trained.train_seconds},
        {"event_sampling_seconds", outcome.event_sampling_seconds},
    };
    json events = json::array();
    for (const auto& event : trained.events)
        events.push_back({{"event", event.event_index},
                          {"epoch", event.epoch},
                          {"sampling_seconds", event.sampling_seconds},
                          {"parents", event.parents},
                          {"children", event.children},
                          {"active_interior_after", event.active_interior_after},
                          {"pmf_fallback", event.pmf_fallback}});
    manifest["events"] = events;
    {
        std::ofstream f(run_dir / "manifest.json", std::ios::trunc);
        f << manifest.dump(2) << "\n";
        if (!f) throw NumericError("manifest.json write failed");
    }
    return outcome;
}

std::vector<RunOutcome> cmd_run(const ExperimentConfig& cfg) {
    cfg.validate();
    const fdsolver::FdSolution oracle =
        fdsolver::solve(cfg.setup.props, cfg.setup.domain, cfg.setup.inlet, cfg.oracle);
    std::vector<RunOutcome> outcomes;
    for (std::uint64_t seed : cfg.seeds)
        outcomes.push_back(run_single(cfg, method_name(cfg.train.sampler.method),
                                      cfg.train.sampler.method,
                                      cfg.train.sampler.refinement_factor, seed, oracle));
    return outcomes;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ConfigError("median of an empty list");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

std::size_t worker_cap() {
    if (const char* env = std::getenv("RESAMPLE_PINN_THREADS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed >= 1) return static_cast<std::size_t>(parsed);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

struct Variant {
    std::string label;
    sampling::Method method;
    int refinement_factor;
};

}  // namespace

CompareResult cmd_compare(const ExperimentConfig& cfg) {
    cfg.validate();
    const fdsolver::FdSolution oracle =
        fdsolver::solve(cfg.setup.props, cfg.setup.domain, cfg.setup.inlet, cfg.oracle);

    const std::vector<Variant> variants = {
        {"base", sampling::Method::None, cfg.train.sampler.refinement_factor},
        {"asm1", sampling::Method::Asm1, cfg.train.sampler.refinement_factor},
        {"asm2", sampling::Method::Asm2, cfg.train.sampler.refinement_factor},
        {"asm3a", sampling::Method::Asm3, 2},
        {"asm3b", sampling::Method::Asm3, 4},
    };

    struct Job {
        Variant variant;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto& variant : variants)
        for (std::uint64_t seed : cfg.seeds) jobs.push_back({variant, seed});

    CompareResult result;
    result.oracle_hash = hash_hex(oracle.content_hash());
    result.runs.resize(jobs.size());

    const std::size_t cap = worker_cap();
    if (cap <= 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i)
            result.runs[i] = run_single(cfg, jobs[i].variant.label, jobs[i].variant.method,
                                        jobs[i].variant.refinement_factor, jobs[i].seed, oracle);
    } else {
        std::size_t next = 0;
        while (next < jobs.size()) {
            const std::size_t batch_end = std::min(jobs.size(), next + cap);
            std::vector<std::future<RunOutcome>> wave;
            for (std::size_t i = next; i < batch_end; ++i)
                wave.push_back(std::async(std::launch::async, [&, i] {
                    return run_single(cfg, jobs[i].variant.label, jobs[i].variant.method,
                                      jobs[i].variant.refinement_factor, jobs[i].seed, oracle);
                }));
            for (std::size_t i = next; i < batch_end; ++i)
                result.runs[i] = wave[i - next].get();
            next = batch_end;
        }
    }

    for (const auto& variant : variants) {
        std::vector<double> l2s, r2s, train_secs, event_ms;
        for (const auto& run : result.runs) {
            if (run.method_label != variant.label) continue;
            l2s.push_back(run.relative_l2);
            r2s.push_back(run.r_squared_outlet);
            train_secs.push_back(run.train_seconds);
            for (double s : run.event_sampling_seconds) event_ms.push_back(1e3 * s);
        }
        CompareRow row;
        row.method_label = variant.label;
        row.median_rel_l2 = median(l2s);
        row.min_rel_l2 = *std::min_element(l2s.begin(), l2s.end());
        row.max_rel_l2 = *std::max_element(l2s.begin(), l2s.end());
        row.median_r_squared = median(r2s);
        row.median_event_sampling_ms = event_ms.empty() ? 0.0 : median(event_ms);
        row.median_train_seconds = median(train_secs);
        result.rows.push_back(row);
    }

    fs::create_directories(cfg.output_dir);
    {
        std::ofstream f(fs::path(cfg.output_dir) / "comparison.csv", std::ios::trunc);
        f << "method,median_rel_l2,min_rel_l2,max_rel_l2,median_r_squared_outlet,"
             "median_event_sampling_ms,median_train_seconds\n";
        for (const auto& row : result.rows)
            f << join_csv_row({row.method_label, format_double(row.median_rel_l2),
                               format_double(row.min_rel_l2), format_double(row.max_rel_l2),
                               format_double(row.median_r_squared),
                               format_double(row.median_event_sampling_ms),
                               format_double(row.median_train_seconds)});
        if (!f) throw NumericError("comparison.csv write failed");
    }
    {
        std::ofstream f(fs::path(cfg.output_dir) / "comparison.txt", std::ios::trunc);
        f << format_compare_table(result);
        if (!f) throw NumericError("comparison.txt write failed");
    }
    return result;
}

std::string format_compare_table(const CompareResult& result) {
    std::ostringstream out;
    out << std::left << std::setw(8) << "method" << std::right << std::setw(14) << "median L2"
        << std::setw(14) << "min L2" << std::setw(14) << "max L2" << std::setw(12) << "R2(t,xmax)"
        << std::setw(16) << "sampling ms/ev" << std::setw(12) << "train s" << "\n";
    out << std::string(90, '-') << "\n";
    for (const auto& row : result.rows) {
        out << std::left << std::setw(8) << row.method_label << std::right << std::scientific
            << std::setprecision(3) << std::setw(14) << row.median_rel_l2 << std::setw(14)
            << row.min_rel_l2 << std::setw(14) << row.max_rel_l2 << std::fixed
            << std::setprecision(4) << std::setw(12) << row.median_r_squared
            << std::setprecision(3) << std::setw(16) << row.median_event_sampling_ms
            << std::setprecision(1) << std::setw(12) << row.median_train_seconds << "\n";
    }
    out << "oracle hash: " << result.oracle_hash << "\n";
    return out.str();
}

OracleReport cmd_verify_oracle(const ExperimentConfig& cfg) {
    cfg.validate();
    OracleReport report;
    const double d_eff = cfg.setup.props.effective_dispersion();
    report.probe_error_default = fdsolver::diffusion_probe_error(
        cfg.setup.props.porosity, d_eff, cfg.setup.domain, cfg.oracle);
    const fdsolver::ConvergenceReport conv = fdsolver::diffusion_probe_convergence(
        cfg.setup.props.porosity, d_eff, cfg.setup.domain, 40, 40, 3);
    report.convergence_order = conv.order;
    report.resolutions = conv.resolutions;
    report.errors = conv.errors;
    report.passed =
        report.convergence_order >= 1.7 && report.convergence_order <= 2.3 &&
        report.probe_error_default < 1e-4;
    return report;
}

std::string cmd_sample_demo(int refinement_factor, std::uint64_t seed,
                            const std::string& output_path) {
    if (refinement_factor < 2) throw ConfigError("sample-demo refinement factor must be >= 2");
    pde::DomainSpec domain;
    const sampling::ReferenceGrid grid = sampling::build_reference_grid(domain, 5, 5);

    sampling::SamplerConfig sampler;
    sampler.method = sampling::Method::Asm3;
    sampler.points_per_event = refinement_factor - 1;
    sampler.refinement_factor = refinement_factor;
    sampler.seed = seed;

    sampling::ResidualField uniform;
    uniform.values.assign(grid.size(), 1.0);
    Rng rng(seed);
    const sampling::SampleBatch batch =
        sampling::asm3_resample(grid, uniform, sampler, domain, rng);
    sampling::write_batches_csv(output_path, {batch}, grid);
    return output_path;
}

void cmd_export_heatmap(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                        const std::string& output_dir) {
    cfg.validate();
    std::vector<int> layer_sizes;
    const diffnet::NetworkParams params = diffnet::load_checkpoint(checkpoint_path, &layer_sizes);
    diffnet::NetworkConfig net = cfg.resolved_network();
    net.layer_sizes = layer_sizes;
    net.validate();

    fs::create_directories(output_dir);
    const pde::JetProvider provider = pde::make_network_provider(params, net);

    // residual magnitudes on the reference residual grid
    const sampling::ReferenceGrid grid = sampling::build_reference_grid(
        cfg.setup.domain, cfg.setup.colloc.grid_t_count, cfg.setup.colloc.grid_x_count);
    std::vector<std::pair<double, double>> grid_pts;
    for (std::size_t i = 0; i < grid.size(); ++i) grid_pts.push_back(grid.point(i));
    const sampling::ResidualField residuals =
        metrics::residual_field_on(grid_pts, provider, cfg.setup.props);
    metrics::write_heatmap_csv((fs::path(output_dir) / "residual_heatmap.csv").string(), grid_pts,
                               residuals.values);
    metrics::write_heatmap_svg((fs::path(output_dir) / "residual_heatmap.svg").string(),
                               grid.t_nodes, grid.x_nodes, residuals.values,
                               "|PDE residual| on the reference grid");

    // predicted concentration on the dense evaluation grid
    const metrics::EvalGrid eval_grid = metrics::make_eval_grid(
        cfg.setup.domain, cfg.metrics.eval_t_count, cfg.metrics.eval_x_count);
    std::vector<std::pair<double, double>> eval_pts;
    std::vector<double> values(eval_grid.size());
    for (std::size_t i = 0; i < eval_grid.size(); ++i) {
        eval_pts.push_back(eval_grid.point(i));
        values[i] = diffnet::forward(params, net, eval_pts.back().first, eval_pts.back().second);
    }
    metrics::write_heatmap_csv((fs::path(output_dir) / "concentration_heatmap.csv").string(),
                               eval_pts, values);
    metrics::write_heatmap_svg((fs::path(output_dir) / "concentration_heatmap.svg").string(),
                               eval_grid.t_values, eval_grid.x_values, values,
                               "predicted concentration c(t, x)");
}

}  // namespace rpinn::experiment
