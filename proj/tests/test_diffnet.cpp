#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "rpinn/diffnet.hpp"
#include "rpinn/pde.hpp"

using namespace rpinn;
using diffnet::Activation;
using diffnet::Axis;
using diffnet::NetworkConfig;
using diffnet::NetworkParams;

namespace {

NetworkConfig default_config() {
    NetworkConfig cfg;
    cfg.input_scale_t = 1.0 / 6000.0;
    cfg.input_scale_x = 1.0;
    return cfg;
}

NetworkConfig tiny_config(std::vector<int> sizes) {
    NetworkConfig cfg;
    cfg.layer_sizes = std::move(sizes);
    cfg.input_scale_t = 1.0;
    cfg.input_scale_x = 1.0;
    return cfg;
}

NetworkParams zero_params_for(const NetworkConfig& cfg) {
    NetworkParams p = diffnet::init_params(cfg, 0);
    p.set_zero();
    return p;
}

// Straight-line reimplementation of the forward evaluation, kept independent
// of the Eigen-based code path on purpose.
double naive_forward(const NetworkParams& p, const NetworkConfig& cfg, double t, double x) {
    std::vector<double> act = {t * cfg.input_scale_t, x * cfg.input_scale_x};
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        const bool last = l + 1 == p.weights.size();
        std::vector<double> next(static_cast<std::size_t>(p.weights[l].rows()));
        for (std::size_t i = 0; i < next.size(); ++i) {
            double s = p.biases[l](static_cast<Eigen::Index>(i));
            for (std::size_t j = 0; j < act.size(); ++j)
                s += p.weights[l](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                     act[j];
            if (!last)
                s = cfg.activation == Activation::Sigmoid ? 1.0 / (1.0 + std::exp(-s))
                                                          : std::tanh(s);
            next[i] = s;
        }
        act = std::move(next);
    }
    return act[0];
}

bool close_rel(double a, double b, double rtol) {
    return std::abs(a - b) <= rtol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("init_params zeroes biases and respects the glorot bound") {
    const NetworkConfig two_one = tiny_config({2, 1});
    const NetworkParams p = diffnet::init_params(two_one, 5);
    CHECK(p.biases.back()(0) == 0.0);

    const NetworkConfig cfg = default_config();
    const NetworkParams q = diffnet::init_params(cfg, 7);
    const double first_bound = std::sqrt(6.0 / (2 + 50));
    for (Eigen::Index i = 0; i < q.weights[0].rows(); ++i)
        for (Eigen::Index j = 0; j < q.weights[0].cols(); ++j)
            CHECK(std::abs(q.weights[0](i, j)) <= first_bound);
    const double hidden_bound = std::sqrt(6.0 / (50 + 50));
    CHECK(q.weights[1].cwiseAbs().maxCoeff() <= hidden_bound);
    const double out_bound = std::sqrt(6.0 / (50 + 1));
    CHECK(q.weights[3].cwiseAbs().maxCoeff() <= out_bound);
    for (const auto& b : q.biases) CHECK(b.isZero(0.0));
}

TEST_CASE("init_params is bitwise deterministic in (config, seed)") {
    const NetworkConfig cfg = default_config();
    const NetworkParams a = diffnet::init_params(cfg, 42);
    const NetworkParams b = diffnet::init_params(cfg, 42);
    REQUIRE(a.congruent_with(b));
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        CHECK((a.weights[l].array() == b.weights[l].array()).all());
        CHECK((a.biases[l].array() == b.biases[l].array()).all());
    }
    const NetworkParams c = diffnet::init_params(cfg, 43);
    CHECK(a.weights[0] != c.weights[0]);
}

TEST_CASE("forward of an all-zero network is zero") {
    for (auto sizes : {std::vector<int>{2, 1}, std::vector<int>{2, 50, 1}}) {
        const NetworkConfig cfg = tiny_config(sizes);
        const NetworkParams p = zero_params_for(cfg);
        CHECK(diffnet::forward(p, cfg, 0.3, 0.7) == 0.0);
    }
}

TEST_CASE("forward matches an independent straight-line evaluation") {
    const NetworkConfig cfg = default_config();
    const NetworkParams p = diffnet::init_params(cfg, 3);
    for (auto [t, x] : {std::pair{0.0, 0.0}, std::pair{1234.5, 0.25}, std::pair{6000.0, 1.0}}) {
        const double got = diffnet::forward(p, cfg, t, x);
        const double expected = naive_forward(p, cfg, t, x);
        CHECK(close_rel(got, expected, 1e-12));
    }
}

TEST_CASE("forward rejects non-finite inputs") {
    const NetworkConfig cfg = tiny_config({2, 1});
    const NetworkParams p = zero_params_for(cfg);
    CHECK_THROWS_AS(diffnet::forward(p, cfg, std::nan(""), 0.0), DomainError);
    CHECK_THROWS_AS(diffnet::forward(p, cfg, 0.0, INFINITY), DomainError);
}

TEST_CASE("forward_jet of the zero network is the zero jet") {
    const NetworkConfig cfg = tiny_config({2, 1});
    const NetworkParams p = zero_params_for(cfg);
    const diffnet::Jet2 j = diffnet::forward_jet(p, cfg, 0.4, 0.6, Axis::X);
    CHECK(j.value == 0.0);
    CHECK(j.d1 == 0.0);
    CHECK(j.d2 == 0.0);
}

TEST_CASE("forward_jet of a single affine layer is the linear map") {
    const NetworkConfig cfg = tiny_config({2, 1});
    NetworkParams p = zero_params_for(cfg);
    p.weights[0](0, 0) = 1.75;   // w_t
    p.weights[0](0, 1) = -0.25;  // w_x
    const diffnet::Jet2 jx = diffnet::forward_jet(p, cfg, 2.0, 3.0, Axis::X);
    CHECK(jx.d1 == -0.25);
    CHECK(jx.d2 == 0.0);
    const diffnet::Jet2 jt = diffnet::forward_jet(p, cfg, 2.0, 3.0, Axis::T);
    CHECK(jt.d1 == 1.75);
    CHECK(jt.d2 == 0.0);
    CHECK(jt.value == 1.75 * 2.0 - 0.25 * 3.0);
}

TEST_CASE("jet value equals forward exactly") {
    const NetworkConfig cfg = default_config();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const NetworkParams p = diffnet::init_params(cfg, seed);
        for (auto [t, x] : {std::pair{100.0, 0.1}, std::pair{5900.0, 0.9}}) {
            const double f = diffnet::forward(p, cfg, t, x);
            CHECK(diffnet::forward_jet(p, cfg, t, x, Axis::T).value == f);
            CHECK(diffnet::forward_jet(p, cfg, t, x, Axis::X).value == f);
        }
    }
}

namespace {

// central-difference oracle on forward()
void check_jet_against_fd(const NetworkParams& p, const NetworkConfig& cfg, double t, double x,
                          Axis axis, double extent) {
    const double h = 1e-4 * extent;
    const diffnet::Jet2 j = diffnet::forward_jet(p, cfg, t, x, axis);
    double fp, fm, f0 = diffnet::forward(p, cfg, t, x);
    if (axis == Axis::T) {
        fp = diffnet::forward(p, cfg, t + h, x);
        fm = diffnet::forward(p, cfg, t - h, x);
    } else {
        fp = diffnet::forward(p, cfg, t, x + h);
        fm = diffnet::forward(p, cfg, t, x - h);
    }
    const double fd1 = (fp - fm) / (2.0 * h);
    const double fd2 = (fp - 2.0 * f0 + fm) / (h * h);
    CHECK(std::abs(j.d1 - fd1) <= 1e-5 * std::max(1.0, std::abs(j.d1)));
    CHECK(std::abs(j.d2 - fd2) <= 1e-4 * std::max(1.0, std::abs(j.d2)));
}

}  // namespace

TEST_CASE("jet derivatives match central finite differences") {
    const NetworkConfig cfg = default_config();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const NetworkParams p = diffnet::init_params(cfg, seed);
        check_jet_against_fd(p, cfg, 1500.0, 0.35, Axis::T, 6000.0);
        check_jet_against_fd(p, cfg, 1500.0, 0.35, Axis::X, 1.0);
        check_jet_against_fd(p, cfg, 4800.0, 0.85, Axis::T, 6000.0);
        check_jet_against_fd(p, cfg, 4800.0, 0.85, Axis::X, 1.0);
    }

    NetworkConfig tanh_cfg = default_config();
    tanh_cfg.activation = Activation::Tanh;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const NetworkParams p = diffnet::init_params(tanh_cfg, seed);
        check_jet_against_fd(p, tanh_cfg, 900.0, 0.5, Axis::T, 6000.0);
        check_jet_against_fd(p, tanh_cfg, 900.0, 0.5, Axis::X, 1.0);
    }
}

TEST_CASE("loss_gradient of an empty loss is zero") {
    const NetworkConfig cfg = tiny_config({2, 4, 1});
    const NetworkParams p = diffnet::init_params(cfg, 11);
    const diffnet::LossSpec spec;  // no terms
    const auto [loss, grad] = diffnet::loss_gradient(p, cfg, spec);
    CHECK(loss.total == 0.0);
    for (const auto& w : grad.weights) CHECK(w.isZero(0.0));
    for (const auto& b : grad.biases) CHECK(b.isZero(0.0));
}

TEST_CASE("loss_gradient of squared output at zero params has zero output-bias gradient") {
    const NetworkConfig cfg = default_config();
    const NetworkParams p = zero_params_for(cfg);
    diffnet::LossSpec spec;
    diffnet::ResidualTerm term;
    term.t = 1000.0;
    term.x = 0.5;
    term.value_coeff = 1.0;
    spec.terms.push_back(term);
    const auto [loss, grad] = diffnet::loss_gradient(p, cfg, spec);
    CHECK(loss.total == 0.0);
    CHECK(grad.biases.back()(0) == 0.0);
}

TEST_CASE("loss_gradient matches central finite differences on a composite pde loss") {
    const NetworkConfig cfg = tiny_config({2, 8, 8, 1});
    pde::MediumProperties props;
    pde::DomainSpec domain;
    domain.t_max = 1.0;  // unit square keeps the fd step well conditioned
    pde::InletPulseSpec inlet;
    inlet.rise_center = 0.2;
    inlet.fall_center = 0.8;
    inlet.steepness = 10.0;
    pde::LossWeights weights;
    weights.pde = 3.0;
    weights.inlet = 0.5;
    weights.outlet = 2.0;
    weights.initial = 1.0;
    pde::CollocationSet points;
    points.interior = {{0.25, 0.25}, {0.5, 0.75}, {0.9, 0.4}};
    points.inlet_times = {0.1, 0.6};
    points.outlet_times = {0.3, 0.95};
    points.initial_positions = {0.2, 0.8};
    const diffnet::LossSpec spec = pde::build_loss_spec(props, domain, inlet, weights, points);

    for (std::uint64_t seed : {1ull, 2ull}) {
        NetworkParams p = diffnet::init_params(cfg, seed);
        const auto [loss, grad] = diffnet::loss_gradient(p, cfg, spec);
        CHECK(loss.total > 0.0);
        CHECK(loss.total == diffnet::loss_value(p, cfg, spec).total);

        const double step = 1e-6;
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            for (Eigen::Index i = 0; i < p.weights[l].size(); ++i) {
                double* slot = p.weights[l].data() + i;
                const double saved = *slot;
                *slot = saved + step;
                const double up = diffnet::loss_value(p, cfg, spec).total;
                *slot = saved - step;
                const double down = diffnet::loss_value(p, cfg, spec).total;
                *slot = saved;
                const double fd = (up - down) / (2.0 * step);
                CHECK(close_rel(grad.weights[l].data()[i], fd, 1e-4));
            }
            for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) {
                const double saved = p.biases[l](i);
                p.biases[l](i) = saved + step;
                const double up = diffnet::loss_value(p, cfg, spec).total;
                p.biases[l](i) = saved - step;
                const double down = diffnet::loss_value(p, cfg, spec).total;
                p.biases[l](i) = saved;
                const double fd = (up - down) / (2.0 * step);
                CHECK(close_rel(grad.biases[l](i), fd, 1e-4));
            }
        }
    }
}

TEST_CASE("loss_gradient reports the offending term on a non-finite loss") {
    const NetworkConfig cfg = tiny_config({2, 1});
    NetworkParams p = zero_params_for(cfg);
    p.weights[0](0, 0) = 1e308;
    diffnet::LossSpec spec;
    diffnet::ResidualTerm term;
    term.t = 1e3;
    term.x = 0.0;
    term.value_coeff = 1.0;
    term.weight = 1e308;
    spec.terms.push_back(term);
    CHECK_THROWS_AS((void)diffnet::loss_gradient(p, cfg, spec), NumericError);
}

TEST_CASE("checkpoint round-trips bitwise") {
    const NetworkConfig cfg = tiny_config({2, 6, 3, 1});
    const NetworkParams p = diffnet::init_params(cfg, 99);
    const std::string path = (std::filesystem::temp_directory_path() / "rpinn_ckpt_test.bin").string();
    diffnet::save_checkpoint(path, p);
    std::vector<int> sizes;
    const NetworkParams q = diffnet::load_checkpoint(path, &sizes);
    CHECK(sizes == std::vector<int>{2, 6, 3, 1});
    REQUIRE(p.congruent_with(q));
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        CHECK((p.weights[l].array() == q.weights[l].array()).all());
        CHECK((p.biases[l].array() == q.biases[l].array()).all());
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects foreign files") {
    const std::string path = (std::filesystem::temp_directory_path() / "rpinn_ckpt_bogus.bin").string();
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("not a checkpoint at all", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS((void)diffnet::load_checkpoint(path), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("network config validation names the offending field") {
    NetworkConfig cfg;
    cfg.layer_sizes = {3, 4, 1};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.layer_sizes = {2, 4, 2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.layer_sizes = {2, 4, 1};
    cfg.input_scale_t = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
