#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rpinn/common.hpp"
#include "rpinn/pde.hpp"
#include "rpinn/sampling.hpp"

namespace rpinn::metrics {

// Dense evaluation mesh the error norms are computed on.
struct EvalGrid {
    std::vector<double> t_values;
    std::vector<double> x_values;

    std::size_t size() const { return t_values.size() * x_values.size(); }
    std::pair<double, double> point(std::size_t index) const {
        const std::size_t nx = x_values.size();
        return {t_values[index / nx], x_values[index % nx]};
    }
};

EvalGrid make_eval_grid(const pde::DomainSpec& domain, int t_count = 121, int x_count = 101);

// ||pred - ref||_2 / ||ref||_2 over flattened grid values.
double relative_l2(const std::vector<double>& pred, const std::vector<double>& ref);

// 1 - SS_res / SS_tot
double r_squared(const std::vector<double>& pred, const std::vector<double>& ref);

// |PDE residual| of the network at each point.
sampling::ResidualField residual_field_on(const std::vector<std::pair<double, double>>& points,
                                          const pde::JetProvider& net,
                                          const pde::MediumProperties& props);

void write_heatmap_csv(const std::string& path,
                       const std::vector<std::pair<double, double>>& points,
                       const std::vector<double>& values);

// Standalone SVG rendering: one rectangle per grid cell, linear color scale,
// min/max annotated.
void write_heatmap_svg(const std::string& path, const std::vector<double>& t_values,
                       const std::vector<double>& x_values, const std::vector<double>& row_major,
                       const std::string& title);

}  // namespace rpinn::metrics
