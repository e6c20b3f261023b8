#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rpinn/common.hpp"

namespace rpinn::diffnet {

enum class Activation { Sigmoid, Tanh };

enum class Axis { T, X };

// Dense feed-forward architecture approximating c(t, x). Inputs are scaled
// by input_scale before entering the first layer, so a domain like
// t in [0, 6000] maps onto the unit interval and hidden sigmoids stay away
// from saturation. All derivatives reported by the evaluation routines are
// chain-rule-corrected back to raw (t, x) units.
struct NetworkConfig {
    std::vector<int> layer_sizes{2, 50, 50, 50, 1};
    Activation activation = Activation::Sigmoid;
    double input_scale_t = 1.0;
    double input_scale_x = 1.0;

    void validate() const;
    int layer_count() const { return static_cast<int>(layer_sizes.size()) - 1; }
};

// Weight matrices are (layer output size) x (layer input size); biases are
// column vectors. ParamGradient shares the layout: entry (l, i, j) is the
// loss derivative with respect to weights[l](i, j).
struct NetworkParams {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    bool congruent_with(const NetworkParams& other) const;
    bool all_finite() const;
    std::size_t scalar_count() const;
    void set_zero();
};

using ParamGradient = NetworkParams;

// Value and first/second directional derivative along one raw input axis.
struct Jet2 {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

// One residual term of a quadratic loss. The residual is affine in the
// network value and its axis derivatives at a single point:
//   r = value_coeff * c + dt_coeff * dc/dt + dx_coeff * dc/dx
//     + dxx_coeff * d2c/dx2 + constant
// and contributes weight * r^2 to the loss. `group` indexes the reporting
// bucket (pde / inlet / outlet / initial in the transport problem).
struct ResidualTerm {
    double t = 0.0;
    double x = 0.0;
    double weight = 1.0;
    double value_coeff = 0.0;
    double dt_coeff = 0.0;
    double dx_coeff = 0.0;
    double dxx_coeff = 0.0;
    double constant = 0.0;
    int group = 0;
};

struct LossSpec {
    std::vector<ResidualTerm> terms;
    int group_count = 1;
};

struct LossBreakdown {
    double total = 0.0;
    std::vector<double> by_group;
};

// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
// Draw order is fixed: layers in order, weight entries row-major, so a given
// (config, seed) pair is bitwise reproducible.
NetworkParams init_params(const NetworkConfig& config, std::uint64_t seed);

// Plain scalar evaluation at raw (t, x). Shares the jet code path, so
// forward(...) == forward_jet(...).value exactly.
double forward(const NetworkParams& params, const NetworkConfig& config, double t, double x);

// Value plus first and second derivative along one raw input axis,
// propagated as second-order Taylor coefficients through every layer.
Jet2 forward_jet(const NetworkParams& params, const NetworkConfig& config, double t, double x,
                 Axis axis);

LossBreakdown loss_value(const NetworkParams& params, const NetworkConfig& config,
                         const LossSpec& spec);

struct LossAndGradient {
    LossBreakdown loss;
    ParamGradient grad;
};

// Loss value plus the exact gradient with respect to every parameter,
// obtained by a reverse pass over the derivative-carrying forward
// computation. Throws NumericError (naming the term) if any contribution
// is non-finite.
LossAndGradient loss_gradient(const NetworkParams& params, const NetworkConfig& config,
                              const LossSpec& spec);

ParamGradient zero_gradient(const NetworkConfig& config);

// Flat little-endian binary checkpoint:
//   "PINN" | u32 version | u32 layer-size count | u32 sizes... |
//   per layer: row-major weight matrix (f64), bias vector (f64)
void save_checkpoint(const std::string& path, const NetworkParams& params);
NetworkParams load_checkpoint(const std::string& path, std::vector<int>* layer_sizes_out = nullptr);

}  // namespace rpinn::diffnet
