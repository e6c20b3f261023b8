#include "rpinn/fdsolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace rpinn::fdsolver {

void FdConfig::validate() const {
    if (x_cells < 10) throw ConfigError("oracle.x_cells must be >= 10");
    if (t_steps < 10) throw ConfigError("oracle.t_steps must be >= 10");
    if (theta < 0.0 || theta > 1.0) throw ConfigError("oracle.theta must lie in [0, 1]");
}

std::uint64_t FdSolution::content_hash() const {
    std::uint64_t h = fnv1a64(times.data(), times.size() * sizeof(double));
    h = fnv1a64(nodes.data(), nodes.size() * sizeof(double), h);
    h = fnv1a64(values.data(), values.size() * sizeof(double), h);
    return h;
}

std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys) {
    const std::size_t n = sys.main.size();
    if (n == 0 || sys.rhs.size() != n || sys.sub.size() + 1 != n || sys.super.size() + 1 != n)
        throw ConfigError("tridiagonal system dimensions are inconsistent");

    std::vector<double> c_prime(n - 1), d_prime(n);
    double pivot = sys.main[0];
    if (pivot == 0.0) throw SingularSystemError("zero pivot in tridiagonal solve (row 0)");
    if (n > 1) c_prime[0] = sys.super[0] / pivot;
    d_prime[0] = sys.rhs[0] / pivot;

    for (std::size_t i = 1; i < n; ++i) {
        pivot = sys.main[i] - sys.sub[i - 1] * c_prime[i - 1];
        if (pivot == 0.0)
            throw SingularSystemError("zero pivot in tridiagonal solve (row " + std::to_string(i) +
                                      ")");
        if (i < n - 1) c_prime[i] = sys.super[i] / pivot;
        d_prime[i] = (sys.rhs[i] - sys.sub[i - 1] * d_prime[i - 1]) / pivot;
    }

    std::vector<double> y(n);
    y[n - 1] = d_prime[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) y[i] = d_prime[i] - c_prime[i] * y[i + 1];
    return y;
}

FdSolution solve_custom(double porosity, double velocity, double effective_dispersion,
                        const DomainSpec& domain, const FdConfig& cfg,
                        const std::function<double(double)>& inlet_fn, OutletBc outlet,
                        const std::function<double(double)>& initial_fn) {
    cfg.validate();
    domain.validate();
    if (!(porosity > 0.0) || !(effective_dispersion > 0.0) || velocity < 0.0)
        throw ConfigError("fd solver needs porosity > 0, dispersion > 0, velocity >= 0");

    const std::size_t n_nodes = static_cast<std::size_t>(cfg.x_cells) + 1;
    const std::size_t n_times = static_cast<std::size_t>(cfg.t_steps) + 1;
    const double dx = domain.x_extent() / cfg.x_cells;
    const double dt = domain.t_max / cfg.t_steps;

    FdSolution sol;
    sol.cell_peclet = velocity * dx / effective_dispersion;
    sol.peclet_warning = sol.cell_peclet >= 2.0;
    sol.times.resize(n_times);
    for (std::size_t n = 0; n < n_times; ++n) sol.times[n] = n * dt;
    sol.times.back() = domain.t_max;
    sol.nodes.resize(n_nodes);
    for (std::size_t j = 0; j < n_nodes; ++j) sol.nodes[j] = domain.x_min + j * dx;
    sol.nodes.back() = domain.x_max;
    sol.values.assign(n_times * n_nodes, 0.0);

    // t = 0 row: initial condition, inlet value taking precedence at the
    // inlet node so the stored inlet column is the boundary data throughout.
    for (std::size_t j = 0; j < n_nodes; ++j) sol.values[j] = initial_fn(sol.nodes[j]);
    sol.values[0] = inlet_fn(0.0);
    if (outlet == OutletBc::DirichletZero) sol.values[n_nodes - 1] = 0.0;

    const double adv = velocity / (2.0 * dx);              // A
    const double dif = effective_dispersion / (dx * dx);   // B
    const double step = dt / porosity;
    const double th = cfg.theta;
    const double lo = adv + dif;   // coefficient of c_{j-1} inside L
    const double hi = dif - adv;   // coefficient of c_{j+1} inside L

    TridiagonalSystem sys;
    sys.sub.resize(n_nodes - 1);
    sys.main.resize(n_nodes);
    sys.super.resize(n_nodes - 1);
    sys.rhs.resize(n_nodes);

    std::vector<double> prev(n_nodes);
    for (std::size_t n = 1; n < n_times; ++n) {
        std::copy(sol.values.begin() + static_cast<std::ptrdiff_t>((n - 1) * n_nodes),
                  sol.values.begin() + static_cast<std::ptrdiff_t>(n * n_nodes), prev.begin());

        // inlet row: Dirichlet
        sys.main[0] = 1.0;
        sys.super[0] = 0.0;
        sys.rhs[0] = inlet_fn(sol.times[n]);

        for (std::size_t j = 1; j + 1 < n_nodes; ++j) {
            sys.sub[j - 1] = -step * th * lo;
            sys.main[j] = 1.0 + 2.0 * step * th * dif;
            sys.super[j] = -step * th * hi;
            const double explicit_part =
                lo * prev[j - 1] - 2.0 * dif * prev[j] + hi * prev[j + 1];
            sys.rhs[j] = prev[j] + step * (1.0 - th) * explicit_part;
        }

        const std::size_t last = n_nodes - 1;
        if (outlet == OutletBc::ZeroGradient) {
            // ghost node c_{N+1} = c_{N-1}: advection cancels, diffusion
            // becomes 2 B (c_{N-1} - c_N)
            sys.sub[last - 1] = -2.0 * step * th * dif;
            sys.main[last] = 1.0 + 2.0 * step * th * dif;
            sys.rhs[last] =
                prev[last] + 2.0 * step * (1.0 - th) * dif * (prev[last - 1] - prev[last]);
        } else {
            sys.sub[last - 1] = 0.0;
            sys.main[last] = 1.0;
            sys.rhs[last] = 0.0;
        }

        const std::vector<double> next = solve_tridiagonal(sys);
        std::copy(next.begin(), next.end(),
                  sol.values.begin() + static_cast<std::ptrdiff_t>(n * n_nodes));
    }
    return sol;
}

FdSolution solve(const MediumProperties& props, const DomainSpec& domain,
                 const InletPulseSpec& inlet, const FdConfig& cfg) {
    props.validate();
    inlet.validate();
    return solve_custom(
        props.porosity, props.velocity, props.effective_dispersion(), domain, cfg,
        [&](double t) { return pde::inlet_value(inlet, t); }, OutletBc::ZeroGradient,
        [](double) { return 0.0; });
}

double sample_at(const FdSolution& sol, double t, double x) {
    if (t < sol.times.front() || t > sol.times.back() || x < sol.nodes.front() ||
        x > sol.nodes.back())
        throw DomainError("sample point outside the stored solution table");

    auto locate = [](const std::vector<double>& axis, double v) {
        auto it = std::upper_bound(axis.begin(), axis.end(), v);
        std::size_t i = it == axis.begin() ? 0 : static_cast<std::size_t>(it - axis.begin()) - 1;
        if (i + 1 >= axis.size()) i = axis.size() - 2;
        const double frac = (v - axis[i]) / (axis[i + 1] - axis[i]);
        return std::pair<std::size_t, double>{i, frac};
    };
    const auto [it, ut] = locate(sol.times, t);
    const auto [ix, ux] = locate(sol.nodes, x);

    const double c00 = sol.at(it, ix);
    const double c01 = sol.at(it, ix + 1);
    const double c10 = sol.at(it + 1, ix);
    const double c11 = sol.at(it + 1, ix + 1);
    return (1.0 - ut) * ((1.0 - ux) * c00 + ux * c01) + ut * ((1.0 - ux) * c10 + ux * c11);
}

double diffusion_probe_error(double porosity, double effective_dispersion,
                             const DomainSpec& domain, const FdConfig& cfg) {
    const double pi = std::numbers::pi;
    const double extent = domain.x_extent();
    const FdSolution sol = solve_custom(
        porosity, 0.0, effective_dispersion, domain, cfg, [](double) { return 0.0; },
        OutletBc::DirichletZero,
        [&](double x) { return std::sin(pi * (x - domain.x_min) / extent); });

    const double decay = std::exp(-effective_dispersion * pi * pi * domain.t_max /
                                  (porosity * extent * extent));
    const std::size_t last_row = sol.times.size() - 1;
    double err2 = 0.0, ref2 = 0.0;
    for (std::size_t j = 0; j < sol.nodes.size(); ++j) {
        const double exact = decay * std::sin(pi * (sol.nodes[j] - domain.x_min) / extent);
        const double diff = sol.at(last_row, j) - exact;
        err2 += diff * diff;
        ref2 += exact * exact;
    }
    return std::sqrt(err2 / ref2);
}

ConvergenceReport diffusion_probe_convergence(double porosity, double effective_dispersion,
                                              const DomainSpec& domain, int base_cells,
                                              int base_steps, int levels) {
    if (levels < 2) throw ConfigError("convergence study needs at least 2 levels");
    ConvergenceReport report;
    for (int k = 0; k < levels; ++k) {
        FdConfig cfg;
        cfg.x_cells = base_cells << k;
        cfg.t_steps = base_steps << k;
        report.resolutions.push_back(cfg.x_cells);
        report.errors.push_back(
            diffusion_probe_error(porosity, effective_dispersion, domain, cfg));
    }
    // least-squares slope of log2(error) against refinement level
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int k = 0; k < levels; ++k) {
        const double y = std::log2(report.errors[static_cast<std::size_t>(k)]);
        sx += k;
        sy += y;
        sxx += static_cast<double>(k) * k;
        sxy += k * y;
    }
    const double n = levels;
    report.order = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    return report;
}

void write_solution_csv(const std::string& path, const FdSolution& sol) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot open solution csv for writing: " + path);
    f << "t,x,c\n";
    for (std::size_t n = 0; n < sol.times.size(); ++n)
        for (std::size_t j = 0; j < sol.nodes.size(); ++j)
            f << join_csv_row({format_double(sol.times[n]), format_double(sol.nodes[j]),
                               format_double(sol.at(n, j))});
    if (!f) throw NumericError("solution csv write failed: " + path);
}

namespace {
constexpr char kTableMagic[4] = {'F', 'T', 'B', 'L'};
constexpr std::uint32_t kTableVersion = 1;
}  // namespace

void save_solution_table(const std::string& path, const FdSolution& sol) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open solution table for writing: " + path);
    f.write(kTableMagic, 4);
    auto write_u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    auto write_u64 = [&](std::uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); };
    write_u32(kTableVersion);
    write_u64(sol.times.size());
    write_u64(sol.nodes.size());
    f.write(reinterpret_cast<const char*>(sol.times.data()),
            static_cast<std::streamsize>(sol.times.size() * sizeof(double)));
    f.write(reinterpret_cast<const char*>(sol.nodes.data()),
            static_cast<std::streamsize>(sol.nodes.size() * sizeof(double)));
    f.write(reinterpret_cast<const char*>(sol.values.data()),
            static_cast<std::streamsize>(sol.values.size() * sizeof(double)));
    const std::uint8_t warn = sol.peclet_warning ? 1 : 0;
    f.write(reinterpret_cast<const char*>(&warn), 1);
    f.write(reinterpret_cast<const char*>(&sol.cell_peclet), sizeof(double));
    if (!f) throw NumericError("solution table write failed: " + path);
}

FdSolution load_solution_table(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open solution table: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kTableMagic, 4) != 0)
        throw ConfigError("not a solution table: " + path);
    std::uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    if (version != kTableVersion) throw ConfigError("unsupported solution table version");
    std::uint64_t nt = 0, nx = 0;
    f.read(reinterpret_cast<char*>(&nt), 8);
    f.read(reinterpret_cast<char*>(&nx), 8);
    if (!f || nt < 2 || nx < 2 || nt > (1u << 26) || nx > (1u << 26))
        throw ConfigError("corrupt solution table header");
    FdSolution sol;
    sol.times.resize(nt);
    sol.nodes.resize(nx);
    sol.values.resize(nt * nx);
    f.read(reinterpret_cast<char*>(sol.times.data()),
           static_cast<std::streamsize>(nt * sizeof(double)));
    f.read(reinterpret_cast<char*>(sol.nodes.data()),
           static_cast<std::streamsize>(nx * sizeof(double)));
    f.read(reinterpret_cast<char*>(sol.values.data()),
           static_cast<std::streamsize>(nt * nx * sizeof(double)));
    std::uint8_t warn = 0;
    f.read(reinterpret_cast<char*>(&warn), 1);
    f.read(reinterpret_cast<char*>(&sol.cell_peclet), sizeof(double));
    if (!f) throw ConfigError("solution table truncated: " + path);
    sol.peclet_warning = warn != 0;
    return sol;
}

}  // namespace rpinn::fdsolver
