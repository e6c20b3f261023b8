#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "rpinn/fdsolver.hpp"

using namespace rpinn;
using fdsolver::FdConfig;
using fdsolver::FdSolution;
using fdsolver::OutletBc;
using fdsolver::TridiagonalSystem;

namespace {

pde::DomainSpec paper_domain() { return pde::DomainSpec{}; }

}  // namespace

TEST_CASE("tridiagonal identity system returns the rhs") {
    TridiagonalSystem sys;
    sys.main = {1.0, 1.0, 1.0, 1.0};
    sys.sub = {0.0, 0.0, 0.0};
    sys.super = {0.0, 0.0, 0.0};
    sys.rhs = {3.0, -1.0, 0.5, 9.0};
    CHECK(fdsolver::solve_tridiagonal(sys) == sys.rhs);
}

TEST_CASE("tridiagonal 2x2 hand-solved system") {
    TridiagonalSystem sys;
    sys.main = {2.0, 2.0};
    sys.sub = {1.0};
    sys.super = {1.0};
    sys.rhs = {3.0, 3.0};
    const auto y = fdsolver::solve_tridiagonal(sys);
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("tridiagonal random diagonally dominant systems solve to 1e-10 residual") {
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 5 + static_cast<std::size_t>(rng.uniform(0.0, 60.0));
        TridiagonalSystem sys;
        sys.main.resize(n);
        sys.sub.resize(n - 1);
        sys.super.resize(n - 1);
        sys.rhs.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (i + 1 < n) {
                sys.sub[i] = rng.uniform(-1.0, 1.0);
                sys.super[i] = rng.uniform(-1.0, 1.0);
            }
            sys.rhs[i] = rng.uniform(-5.0, 5.0);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double off = (i > 0 ? std::abs(sys.sub[i - 1]) : 0.0) +
                               (i + 1 < n ? std::abs(sys.super[i]) : 0.0);
            sys.main[i] = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * (off + 1.0 + rng.uniform01());
        }
        const auto y = fdsolver::solve_tridiagonal(sys);
        double rhs_norm = 0.0, res_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double ay = sys.main[i] * y[i];
            if (i > 0) ay += sys.sub[i - 1] * y[i - 1];
            if (i + 1 < n) ay += sys.super[i] * y[i + 1];
            res_norm = std::max(res_norm, std::abs(ay - sys.rhs[i]));
            rhs_norm = std::max(rhs_norm, std::abs(sys.rhs[i]));
        }
        CHECK(res_norm <= 1e-10 * std::max(1.0, rhs_norm));
    }
}

TEST_CASE("tridiagonal zero pivot raises a singular-system error") {
    TridiagonalSystem sys;
    sys.main = {0.0, 1.0};
    sys.sub = {1.0};
    sys.super = {1.0};
    sys.rhs = {1.0, 1.0};
    CHECK_THROWS_AS((void)fdsolver::solve_tridiagonal(sys), SingularSystemError);
}

TEST_CASE("zero inlet and zero initial condition stay identically zero") {
    FdConfig cfg;
    cfg.x_cells = 40;
    cfg.t_steps = 50;
    const FdSolution sol = fdsolver::solve_custom(
        0.3, 3e-4, 3.001e-6, paper_domain(), cfg, [](double) { return 0.0; },
        OutletBc::ZeroGradient, [](double) { return 0.0; });
    for (double v : sol.values) CHECK(v == 0.0);
}

TEST_CASE("diffusion probe matches the separated analytic solution") {
    FdConfig cfg;
    cfg.x_cells = 400;
    cfg.t_steps = 400;
    const double err =
        fdsolver::diffusion_probe_error(0.3, 3.001e-6, paper_domain(), cfg);
    CHECK(err < 1e-4);
    CHECK(err > 0.0);
}

TEST_CASE("probe error shrinks by about 4x per joint refinement (order 2)") {
    const auto report =
        fdsolver::diffusion_probe_convergence(0.3, 3.001e-6, paper_domain(), 40, 40, 3);
    REQUIRE(report.errors.size() == 3);
    CHECK(report.errors[0] > report.errors[1]);
    CHECK(report.errors[1] > report.errors[2]);
    CHECK(report.order >= 1.7);
    CHECK(report.order <= 2.3);
    // pairwise ratios also sit near 4
    CHECK(report.errors[0] / report.errors[1] == doctest::Approx(4.0).epsilon(0.25));
    CHECK(report.errors[1] / report.errors[2] == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("coarse grids stay order 2") {
    const auto report =
        fdsolver::diffusion_probe_convergence(0.3, 3.001e-6, paper_domain(), 20, 20, 3);
    CHECK(report.errors[0] > 0.0);
    CHECK(report.order >= 1.7);
    CHECK(report.order <= 2.3);
}

TEST_CASE("transport solution respects the discrete maximum principle") {
    const pde::MediumProperties props;
    const pde::DomainSpec domain = paper_domain();
    FdConfig cfg;
    cfg.x_cells = 400;
    cfg.t_steps = 1200;

    SUBCASE("pulse inlet") {
        pde::InletPulseSpec inlet;  // default pulse
        const FdSolution sol = fdsolver::solve(props, domain, inlet, cfg);
        CHECK_FALSE(sol.peclet_warning);
        double max_inlet = 0.0;
        for (double t : sol.times) max_inlet = std::max(max_inlet, pde::inlet_value(inlet, t));
        for (double v : sol.values) {
            CHECK(v >= -1e-9);
            CHECK(v <= max_inlet + 1e-9);
        }
    }
    SUBCASE("monotone inlet") {
        pde::InletPulseSpec inlet;
        inlet.fall_center = 1e9;  // pure rising sigmoid on the simulated span
        const FdSolution sol = fdsolver::solve(props, domain, inlet, cfg);
        double max_inlet = 0.0;
        for (double t : sol.times) max_inlet = std::max(max_inlet, pde::inlet_value(inlet, t));
        for (double v : sol.values) {
            CHECK(v >= -1e-9);
            CHECK(v <= max_inlet + 1e-9);
        }
    }
}

TEST_CASE("stored initial row and inlet column carry the boundary data") {
    const pde::MediumProperties props;
    const pde::DomainSpec domain = paper_domain();
    pde::InletPulseSpec inlet;
    FdConfig cfg;
    cfg.x_cells = 50;
    cfg.t_steps = 60;
    const FdSolution sol = fdsolver::solve(props, domain, inlet, cfg);
    // initial condition everywhere except the inlet corner, which stores the
    // boundary value
    for (std::size_t j = 1; j < sol.nodes.size(); ++j) CHECK(sol.at(0, j) == 0.0);
    for (std::size_t n = 0; n < sol.times.size(); ++n)
        CHECK(sol.at(n, 0) == pde::inlet_value(inlet, sol.times[n]));
}

TEST_CASE("high cell peclet raises the stability warning") {
    const pde::MediumProperties props;
    pde::InletPulseSpec inlet;
    FdConfig cfg;
    cfg.x_cells = 10;  // dx = 0.1 -> Pe = 3e-4 * 0.1 / 3.001e-6 = 10
    cfg.t_steps = 20;
    const FdSolution sol = fdsolver::solve(props, paper_domain(), inlet, cfg);
    CHECK(sol.peclet_warning);
    CHECK(sol.cell_peclet == doctest::Approx(10.0).epsilon(1e-3));
}

TEST_CASE("sample_at interpolates the stored table") {
    const pde::MediumProperties props;
    const pde::DomainSpec domain = paper_domain();
    pde::InletPulseSpec inlet;
    FdConfig cfg;
    cfg.x_cells = 20;
    cfg.t_steps = 30;
    const FdSolution sol = fdsolver::solve(props, domain, inlet, cfg);

    // stored nodes are returned exactly
    for (std::size_t n : {std::size_t{0}, std::size_t{15}, sol.times.size() - 1})
        for (std::size_t j : {std::size_t{0}, std::size_t{10}, sol.nodes.size() - 1})
            CHECK(fdsolver::sample_at(sol, sol.times[n], sol.nodes[j]) == sol.at(n, j));

    // cell-midpoint query averages the 4 surrounding values
    const double tm = 0.5 * (sol.times[3] + sol.times[4]);
    const double xm = 0.5 * (sol.nodes[7] + sol.nodes[8]);
    const double mean =
        0.25 * (sol.at(3, 7) + sol.at(3, 8) + sol.at(4, 7) + sol.at(4, 8));
    CHECK(fdsolver::sample_at(sol, tm, xm) == doctest::Approx(mean).epsilon(1e-14));

    CHECK_THROWS_AS((void)fdsolver::sample_at(sol, -1.0, 0.5), DomainError);
    CHECK_THROWS_AS((void)fdsolver::sample_at(sol, 100.0, 1.5), DomainError);
}

TEST_CASE("solver is deterministic") {
    const pde::MediumProperties props;
    pde::InletPulseSpec inlet;
    FdConfig cfg;
    cfg.x_cells = 30;
    cfg.t_steps = 40;
    const FdSolution a = fdsolver::solve(props, paper_domain(), inlet, cfg);
    const FdSolution b = fdsolver::solve(props, paper_domain(), inlet, cfg);
    CHECK(a.values == b.values);
    CHECK(a.content_hash() == b.content_hash());
}

TEST_CASE("solution table round-trips through the binary format") {
    const pde::MediumProperties props;
    pde::InletPulseSpec inlet;
    FdConfig cfg;
    cfg.x_cells = 15;
    cfg.t_steps = 12;
    const FdSolution sol = fdsolver::solve(props, paper_domain(), inlet, cfg);
    const std::string path =
        (std::filesystem::temp_directory_path() / "rpinn_table_test.bin").string();
    fdsolver::save_solution_table(path, sol);
    const FdSolution loaded = fdsolver::load_solution_table(path);
    CHECK(loaded.times == sol.times);
    CHECK(loaded.nodes == sol.nodes);
    CHECK(loaded.values == sol.values);
    CHECK(loaded.content_hash() == sol.content_hash());
    std::filesystem::remove(path);
}

TEST_CASE("fd config validation") {
    FdConfig cfg;
    cfg.x_cells = 5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = FdConfig{};
    cfg.theta = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
