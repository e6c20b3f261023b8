#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rpinn/common.hpp"
#include "rpinn/pde.hpp"

namespace rpinn::fdsolver {

using pde::DomainSpec;
using pde::InletPulseSpec;
using pde::MediumProperties;

struct FdConfig {
    int x_cells = 2000;
    int t_steps = 6000;
    double theta = 0.5;  // 0.5 = Crank-Nicolson

    void validate() const;
};

// Dense space-time concentration table, bilinearly interpolable.
struct FdSolution {
    std::vector<double> times;   // t_steps + 1 entries
    std::vector<double> nodes;   // x_cells + 1 entries
    std::vector<double> values;  // row-major: values[it * nodes.size() + ix]
    bool peclet_warning = false;
    double cell_peclet = 0.0;

    double at(std::size_t it, std::size_t ix) const { return values[it * nodes.size() + ix]; }
    std::uint64_t content_hash() const;
};

struct TridiagonalSystem {
    std::vector<double> sub;   // n-1
    std::vector<double> main;  // n
    std::vector<double> super; // n-1
    std::vector<double> rhs;   // n
};

// Thomas algorithm; throws SingularSystemError on a zero pivot.
std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys);

enum class OutletBc { ZeroGradient, DirichletZero };

// theta-scheme core for eps_p c_t = -v c_x + D c_xx with configurable
// boundary data; the production transport problem and the analytic test
// probes both route through here.
FdSolution solve_custom(double porosity, double velocity, double effective_dispersion,
                        const DomainSpec& domain, const FdConfig& cfg,
                        const std::function<double(double)>& inlet_fn, OutletBc outlet,
                        const std::function<double(double)>& initial_fn);

// Transport benchmark: Dirichlet inlet pulse, zero-dispersive-flux outlet,
// zero initial condition.
FdSolution solve(const MediumProperties& props, const DomainSpec& domain,
                 const InletPulseSpec& inlet, const FdConfig& cfg);

// Bilinear interpolation on the stored table.
double sample_at(const FdSolution& sol, double t, double x);

// Pure-diffusion verification probe (velocity 0, Dirichlet 0 at both ends,
// IC sin(pi x)) with the separation-of-variables solution as reference.
// Returns the relative L2 error over the final-time profile.
double diffusion_probe_error(double porosity, double effective_dispersion,
                             const DomainSpec& domain, const FdConfig& cfg);

struct ConvergenceReport {
    std::vector<int> resolutions;
    std::vector<double> errors;
    double order = 0.0;  // least-squares slope of log2(error) vs refinement level
};

// Richardson-style study: run the diffusion probe at a ladder of jointly
// refined resolutions and fit the observed convergence order.
ConvergenceReport diffusion_probe_convergence(double porosity, double effective_dispersion,
                                              const DomainSpec& domain, int base_cells,
                                              int base_steps, int levels);

void write_solution_csv(const std::string& path, const FdSolution& sol);
void save_solution_table(const std::string& path, const FdSolution& sol);
FdSolution load_solution_table(const std::string& path);

}  // namespace rpinn::fdsolver
