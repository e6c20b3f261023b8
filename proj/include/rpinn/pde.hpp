#pragma once

#include <functional>
#include <vector>

#include "rpinn/common.hpp"
#include "rpinn/diffnet.hpp"

namespace rpinn::pde {

using diffnet::Axis;
using diffnet::Jet2;

// Transport coefficients of the 1-D advection-dispersion problem.
struct MediumProperties {
    double porosity = 0.3;               // dimensionless
    double dispersivity = 0.01;          // m
    double velocity = 3.0e-4;            // m/s
    double molecular_dispersion = 1e-9;  // m^2/s

    // effective dispersion D_e + alpha_L * v
    double effective_dispersion() const { return molecular_dispersion + dispersivity * velocity; }
    void validate() const;
};

struct DomainSpec {
    double t_max = 6000.0;  // s
    double x_min = 0.0;     // m
    double x_max = 1.0;     // m

    double x_extent() const { return x_max - x_min; }
    bool contains(double t, double x) const {
        return t >= 0.0 && t <= t_max && x >= x_min && x <= x_max;
    }
    void validate() const;
};

// Inlet concentration pulse. literal mode keeps the published closed form
// sigma(a(t-t1)) / (1 + e^{a(t+t1)}), which stays below ~1e-9 on the whole
// time span; pulse mode replaces the second factor with a falling sigmoid
// sigma(-a(t-t2)) so the inlet actually carries a concentration pulse.
struct InletPulseSpec {
    double steepness = 0.02;     // 1/s
    double rise_center = 500.0;  // s
    double fall_center = 5500.0; // s, pulse mode only
    bool literal_mode = false;

    void validate() const;
};

struct LossWeights {
    double pde = 1.0;
    double inlet = 1.0;
    double outlet = 1.0;
    double initial = 1.0;

    void validate() const;
};

// Point sets the loss terms are evaluated on. Interior points carry the PDE
// residual; inlet/outlet lists are times on the two spatial boundaries;
// initial points are positions at t = 0.
struct CollocationSet {
    std::vector<std::pair<double, double>> interior;  // (t, x)
    std::vector<double> inlet_times;
    std::vector<double> outlet_times;
    std::vector<double> initial_positions;

    void validate(const DomainSpec& domain, const LossWeights& weights) const;
};

// Loss reporting buckets, also the `group` ids inside diffnet::LossSpec.
enum LossGroup : int { kPde = 0, kInlet = 1, kOutlet = 2, kInitial = 3, kGroupCount = 4 };

// Anything that can produce value/derivative jets of c(t, x) along an axis.
// The trained network is the production provider; tests plug in analytic
// probes.
using JetProvider = std::function<Jet2(double t, double x, Axis axis)>;

JetProvider make_network_provider(const diffnet::NetworkParams& params,
                                  const diffnet::NetworkConfig& config);

// r = eps_p * dc/dt + v * dc/dx - D_eff * d2c/dx2 (constant-coefficient
// expansion of the conservative transport form).
double pde_residual(const JetProvider& net, const MediumProperties& props, double t, double x);

double inlet_value(const InletPulseSpec& spec, double t);

// D_eff * dc/dx at (t, x_max); zero for a dispersive-flux-free outlet.
double outlet_flux_residual(const JetProvider& net, const MediumProperties& props, double t,
                            double x_max);

// c(0, x) - 0
double initial_residual(const JetProvider& net, double x);

// Static description of the weighted composite loss: every collocation point
// becomes one ResidualTerm with weight w_group / N_group, so the quadratic
// total is the weighted sum of per-group mean squares.
diffnet::LossSpec build_loss_spec(const MediumProperties& props, const DomainSpec& domain,
                                  const InletPulseSpec& inlet, const LossWeights& weights,
                                  const CollocationSet& points);

// Weighted loss evaluated against an arbitrary jet provider. For a provider
// backed by network parameters this matches diffnet::loss_value bit for bit
// (same terms, same accumulation order).
double assemble_loss(const JetProvider& net, const MediumProperties& props,
                     const DomainSpec& domain, const InletPulseSpec& inlet,
                     const LossWeights& weights, const CollocationSet& points);

}  // namespace rpinn::pde
