#include "rpinn/pde.hpp"

#include <cmath>

namespace rpinn::pde {

void MediumProperties::validate() const {
    if (!(porosity > 0.0)) throw ConfigError("medium.porosity must be > 0");
    if (!(dispersivity > 0.0)) throw ConfigError("medium.dispersivity must be > 0");
    if (!(velocity > 0.0)) throw ConfigError("medium.velocity must be > 0");
    if (!(molecular_dispersion > 0.0)) throw ConfigError("medium.molecular_dispersion must be > 0");
    if (!(effective_dispersion() > 0.0)) throw ConfigError("medium effective dispersion must be > 0");
}

void DomainSpec::validate() const {
    if (!(t_max > 0.0)) throw ConfigError("domain.t_max must be > 0");
    if (!(x_max > x_min)) throw ConfigError("domain.x_max must exceed domain.x_min");
}

void InletPulseSpec::validate() const {
    if (!(steepness > 0.0)) throw ConfigError("inlet.steepness must be > 0");
    if (!literal_mode && !(fall_center > rise_center))
        throw ConfigError("inlet.fall_center must exceed inlet.rise_center in pulse mode");
}

void LossWeights::validate() const {
    if (pde < 0.0 || inlet < 0.0 || outlet < 0.0 || initial < 0.0)
        throw ConfigError("loss weights must be non-negative");
    if (pde == 0.0 && inlet == 0.0 && outlet == 0.0 && initial == 0.0)
        throw ConfigError("at least one loss weight must be positive");
}

void CollocationSet::validate(const DomainSpec& domain, const LossWeights& weights) const {
    if (weights.pde > 0.0 && interior.empty())
        throw ConfigError("collocation.interior is empty but the pde weight is positive");
    if (weights.inlet > 0.0 && inlet_times.empty())
        throw ConfigError("collocation.inlet_times is empty but the inlet weight is positive");
    if (weights.outlet > 0.0 && outlet_times.empty())
        throw ConfigError("collocation.outlet_times is empty but the outlet weight is positive");
    if (weights.initial > 0.0 && initial_positions.empty())
        throw ConfigError("collocation.initial_positions is empty but the initial weight is positive");
    for (const auto& [t, x] : interior)
        if (!domain.contains(t, x)) throw ConfigError("interior collocation point outside domain");
    for (double t : inlet_times)
        if (t < 0.0 || t > domain.t_max) throw ConfigError("inlet time outside domain");
    for (double t : outlet_times)
        if (t < 0.0 || t > domain.t_max) throw ConfigError("outlet time outside domain");
    for (double x : initial_positions)
        if (x < domain.x_min || x > domain.x_max)
            throw ConfigError("initial-condition position outside domain");
}

JetProvider make_network_provider(const diffnet::NetworkParams& params,
                                  const diffnet::NetworkConfig& config) {
    return [&params, &config](double t, double x, Axis axis) {
        return diffnet::forward_jet(params, config, t, x, axis);
    };
}

double pde_residual(const JetProvider& net, const MediumProperties& props, double t, double x) {
    const Jet2 jt = net(t, x, Axis::T);
    const Jet2 jx = net(t, x, Axis::X);
    return props.porosity * jt.d1 + props.velocity * jx.d1 -
           props.effective_dispersion() * jx.d2;
}

namespace {
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace

double inlet_value(const InletPulseSpec& spec, double t) {
    const double rise = sigmoid(spec.steepness * (t - spec.rise_center));
    if (spec.literal_mode)
        return rise / (1.0 + std::exp(spec.steepness * (t + spec.rise_center)));
    return rise * sigmoid(-spec.steepness * (t - spec.fall_center));
}

double outlet_flux_residual(const JetProvider& net, const MediumProperties& props, double t,
                            double x_max) {
    return props.effective_dispersion() * net(t, x_max, Axis::X).d1;
}

double initial_residual(const JetProvider& net, double x) {
    return net(0.0, x, Axis::T).value;
}

diffnet::LossSpec build_loss_spec(const MediumProperties& props, const DomainSpec& domain,
                                  const InletPulseSpec& inlet, const LossWeights& weights,
                                  const CollocationSet& points) {
    points.validate(domain, weights);
    diffnet::LossSpec spec;
    spec.group_count = kGroupCount;
    spec.terms.reserve(points.interior.size() + points.inlet_times.size() +
                       points.outlet_times.size() + points.initial_positions.size());

    const double d_eff = props.effective_dispersion();
    if (weights.pde > 0.0) {
        const double w = weights.pde / static_cast<double>(points.interior.size());
        for (const auto& [t, x] : points.interior) {
            diffnet::ResidualTerm term;
            term.t = t;
            term.x = x;
            term.weight = w;
            term.dt_coeff = props.porosity;
            term.dx_coeff = props.velocity;
            term.dxx_coeff = -d_eff;
            term.group = kPde;
            spec.terms.push_back(term);
        }
    }
    if (weights.inlet > 0.0) {
        const double w = weights.inlet / static_cast<double>(points.inlet_times.size());
        for (double t : points.inlet_times) {
            diffnet::ResidualTerm term;
            term.t = t;
            term.x = domain.x_min;
            term.weight = w;
            term.value_coeff = 1.0;
            term.constant = -inlet_value(inlet, t);
            term.group = kInlet;
            spec.terms.push_back(term);
        }
    }
    if (weights.outlet > 0.0) {
        const double w = weights.outlet / static_cast<double>(points.outlet_times.size());
        for (double t : points.outlet_times) {
            diffnet::ResidualTerm term;
            term.t = t;
            term.x = domain.x_max;
            term.weight = w;
            term.dx_coeff = d_eff;
            term.group = kOutlet;
            spec.terms.push_back(term);
        }
    }
    if (weights.initial > 0.0) {
        const double w = weights.initial / static_cast<double>(points.initial_positions.size());
        for (double x : points.initial_positions) {
            diffnet::ResidualTerm term;
            term.t = 0.0;
            term.x = x;
            term.weight = w;
            term.value_coeff = 1.0;
            term.group = kInitial;
            spec.terms.push_back(term);
        }
    }
    return spec;
}

double assemble_loss(const JetProvider& net, const MediumProperties& props,
                     const DomainSpec& domain, const InletPulseSpec& inlet,
                     const LossWeights& weights, const CollocationSet& points) {
    const diffnet::LossSpec spec = build_loss_spec(props, domain, inlet, weights, points);
    std::vector<double> by_group(static_cast<std::size_t>(spec.group_count), 0.0);
    for (const auto& term : spec.terms) {
        double value = 0.0, d1t = 0.0, d1x = 0.0, d2x = 0.0;
        const bool want_t = term.dt_coeff != 0.0;
        const bool want_x = term.dx_coeff != 0.0 || term.dxx_coeff != 0.0;
        if (want_t) {
            const Jet2 j = net(term.t, term.x, Axis::T);
            value = j.value;
            d1t = j.d1;
        }
        if (want_x) {
            const Jet2 j = net(term.t, term.x, Axis::X);
            if (!want_t) value = j.value;
            d1x = j.d1;
            d2x = j.d2;
        }
        if (!want_t && !want_x) value = net(term.t, term.x, Axis::T).value;
        const double r = term.value_coeff * value + term.dt_coeff * d1t + term.dx_coeff * d1x +
                         term.dxx_coeff * d2x + term.constant;
        by_group[static_cast<std::size_t>(term.group)] += term.weight * r * r;
    }
    double total = 0.0;
    for (double g : by_group) total += g;
    return total;
}

}  // namespace rpinn::pde
