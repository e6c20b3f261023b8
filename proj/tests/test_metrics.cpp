#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rpinn/metrics.hpp"

using namespace rpinn;
using pde::Axis;
using pde::Jet2;

TEST_CASE("eval grid covers the domain corners") {
    const pde::DomainSpec domain;
    const metrics::EvalGrid grid = metrics::make_eval_grid(domain);
    CHECK(grid.t_values.size() == 121);
    CHECK(grid.x_values.size() == 101);
    CHECK(grid.t_values.front() == 0.0);
    CHECK(grid.t_values.back() == domain.t_max);
    CHECK(grid.x_values.front() == domain.x_min);
    CHECK(grid.x_values.back() == domain.x_max);
    for (std::size_t i = 1; i < grid.t_values.size(); ++i)
        CHECK(grid.t_values[i] > grid.t_values[i - 1]);
}

TEST_CASE("relative_l2 exact cases") {
    const std::vector<double> ref = {1.0, -2.0, 3.0, 0.5};
    CHECK(metrics::relative_l2(ref, ref) == 0.0);

    std::vector<double> twice = ref;
    for (double& v : twice) v *= 2.0;
    CHECK(metrics::relative_l2(twice, ref) == 1.0);

    std::vector<double> bumped = ref;
    const double delta = 0.25;
    bumped[2] += delta;
    double norm = 0.0;
    for (double v : ref) norm += v * v;
    CHECK(metrics::relative_l2(bumped, ref) ==
          doctest::Approx(delta / std::sqrt(norm)).epsilon(1e-12));

    CHECK_THROWS_AS((void)metrics::relative_l2(ref, {0.0, 0.0, 0.0, 0.0}), NumericError);
}

TEST_CASE("relative_l2 is absolutely homogeneous in the error") {
    Rng rng(14);
    std::vector<double> ref(50), err(50);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        ref[i] = rng.uniform(-2.0, 2.0);
        err[i] = rng.uniform(-1.0, 1.0);
    }
    for (double gamma : {0.25, 2.0, -3.0}) {
        std::vector<double> pred(50), pred_scaled(50);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            pred[i] = ref[i] + err[i];
            pred_scaled[i] = ref[i] + gamma * err[i];
        }
        const double base = metrics::relative_l2(pred, ref);
        const double scaled = metrics::relative_l2(pred_scaled, ref);
        CHECK(scaled == doctest::Approx(std::abs(gamma) * base).epsilon(1e-12));
        CHECK(base >= 0.0);
    }
}

TEST_CASE("r_squared exact cases") {
    const std::vector<double> ref = {0.0, 1.0, 2.0};
    CHECK(metrics::r_squared(ref, ref) == 1.0);

    const std::vector<double> mean_pred = {1.0, 1.0, 1.0};
    CHECK(metrics::r_squared(mean_pred, ref) == 0.0);

    const std::vector<double> off = {0.0, 1.0, 1.0};
    CHECK(metrics::r_squared(off, ref) == doctest::Approx(0.5).epsilon(1e-14));

    CHECK_THROWS_AS((void)metrics::r_squared(ref, {2.0, 2.0, 2.0}), NumericError);
}

TEST_CASE("r_squared never exceeds 1 and is reindexing-invariant") {
    Rng rng(15);
    std::vector<double> ref(30), pred(30);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        ref[i] = rng.uniform(-1.0, 3.0);
        pred[i] = ref[i] + rng.uniform(-0.5, 0.5);
    }
    const double r2 = metrics::r_squared(pred, ref);
    CHECK(r2 <= 1.0);

    // apply the same permutation to both series
    std::vector<double> ref_p(ref.rbegin(), ref.rend());
    std::vector<double> pred_p(pred.rbegin(), pred.rend());
    CHECK(metrics::r_squared(pred_p, ref_p) == doctest::Approx(r2).epsilon(1e-12));
}

TEST_CASE("residual field of trivial probes vanishes") {
    const pde::MediumProperties props;
    const std::vector<std::pair<double, double>> points = {{100.0, 0.1}, {900.0, 0.8}};
    const pde::JetProvider zero = [](double, double, Axis) { return Jet2{0.0, 0.0, 0.0}; };
    for (double v : metrics::residual_field_on(points, zero, props).values) CHECK(v == 0.0);
    const pde::JetProvider constant = [](double, double, Axis) { return Jet2{2.0, 0.0, 0.0}; };
    for (double v : metrics::residual_field_on(points, constant, props).values) CHECK(v == 0.0);
}

TEST_CASE("heatmap exports are well formed") {
    namespace fs = std::filesystem;
    const std::vector<std::pair<double, double>> points = {{0.0, 0.0}, {0.0, 1.0},
                                                           {1.0, 0.0}, {1.0, 1.0}};
    const std::vector<double> values = {0.0, 0.5, 0.75, 1.0};
    const auto csv_path = fs::temp_directory_path() / "rpinn_heatmap_test.csv";
    metrics::write_heatmap_csv(csv_path.string(), points, values);
    std::ifstream csv(csv_path);
    std::string header;
    std::getline(csv, header);
    CHECK(header == "t,x,value");
    int rows = 0;
    for (std::string line; std::getline(csv, line);) ++rows;
    CHECK(rows == 4);
    fs::remove(csv_path);

    const auto svg_path = fs::temp_directory_path() / "rpinn_heatmap_test.svg";
    metrics::write_heatmap_svg(svg_path.string(), {0.0, 1.0}, {0.0, 1.0}, values, "demo");
    std::ifstream svg(svg_path);
    std::string all((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
    CHECK(all.find("<svg") != std::string::npos);
    CHECK(all.find("<rect") != std::string::npos);
    CHECK(all.find("min=0") != std::string::npos);
    CHECK(all.find("max=1") != std::string::npos);
    fs::remove(svg_path);
}
