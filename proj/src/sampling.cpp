#include "rpinn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace rpinn::sampling {

void ResidualField::validate() const {
    for (double v : values)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw NumericError("residual field entries must be finite and non-negative");
}

void PmfConfig::validate() const {
    if (!(exponent > 0.0)) throw ConfigError("pmf.exponent must be > 0");
    if (offset < 0.0) throw ConfigError("pmf.offset must be >= 0");
}

bool SamplerConfig::accumulates() const {
    if (accumulate_override >= 0) return accumulate_override > 0;
    return method != Method::Asm3;
}

void SamplerConfig::validate() const {
    if (points_per_event <= 0) throw ConfigError("sampler.points_per_event must be > 0");
    if (method == Method::Asm3 && refinement_factor < 2)
        throw ConfigError("sampler.refinement_factor must be >= 2");
    if (coefficient_policy == CoefficientPolicy::Constant) {
        if (refinement_factor > 4)
            throw ConfigError("constant coefficient policy is defined for refinement factors 2-4");
        if (std::abs(constant_lambda_t) > 1.0 || std::abs(constant_lambda_x) > 1.0)
            throw ConfigError("constant refinement coefficients must lie in [-1, 1]");
    }
    if (method == Method::Asm2 && asm2_candidate_pool < points_per_event)
        throw ConfigError("sampler.asm2_candidate_pool must be >= points_per_event");
    pmf.validate();
}

int SamplerConfig::asm3_parent_count() const {
    const double m = static_cast<double>(points_per_event) / (refinement_factor - 1);
    return std::max(1, static_cast<int>(std::lround(m)));
}

ReferenceGrid build_reference_grid(const DomainSpec& domain, int t_count, int x_count) {
    if (t_count < 2 || x_count < 2)
        throw ConfigError("reference grid needs at least 2 nodes per axis");
    domain.validate();
    ReferenceGrid grid;
    grid.h_t = domain.t_max / (t_count - 1);
    grid.h_x = domain.x_extent() / (x_count - 1);
    grid.t_nodes.resize(static_cast<std::size_t>(t_count));
    grid.x_nodes.resize(static_cast<std::size_t>(x_count));
    for (int i = 0; i < t_count; ++i) grid.t_nodes[static_cast<std::size_t>(i)] = i * grid.h_t;
    grid.t_nodes.back() = domain.t_max;
    for (int i = 0; i < x_count; ++i)
        grid.x_nodes[static_cast<std::size_t>(i)] = domain.x_min + i * grid.h_x;
    grid.x_nodes.back() = domain.x_max;
    return grid;
}

Pmf compute_pmf(const ResidualField& residuals, const PmfConfig& cfg) {
    cfg.validate();
    residuals.validate();
    const std::size_t n = residuals.values.size();
    if (n == 0) throw ConfigError("residual field is empty");

    std::vector<double> powered(n);
    double sum_powered = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        powered[i] = std::pow(residuals.values[i], cfg.exponent);
        sum_powered += powered[i];
    }
    if (sum_powered <= 0.0 && cfg.offset == 0.0)
        throw DegenerateDistributionError(
            "all residuals are zero and the pmf offset is zero; no mass to distribute");

    const double mean_powered = sum_powered / static_cast<double>(n);
    Pmf pmf;
    pmf.probabilities.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double unnormalized =
            (mean_powered > 0.0 ? powered[i] / mean_powered : 0.0) + cfg.offset;
        pmf.probabilities[i] = unnormalized;
        total += unnormalized;
    }
    for (double& p : pmf.probabilities) p /= total;
    return pmf;
}

std::vector<std::size_t> sample_parents(const Pmf& pmf, int count, Rng& rng) {
    if (count < 1) throw ConfigError("parent sample count must be >= 1");
    const std::size_t n = pmf.probabilities.size();
    std::vector<double> cdf(n);
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (pmf.probabilities[i] > 0.0) last_positive = i;
        acc += pmf.probabilities[i];
        cdf[i] = acc;
    }
    std::vector<std::size_t> parents(static_cast<std::size_t>(count));
    for (auto& idx : parents) {
        const double u = rng.uniform01();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        idx = it == cdf.end() ? last_positive
                              : static_cast<std::size_t>(std::distance(cdf.begin(), it));
        // round-off can land u in a zero-probability bin boundary; step back
        while (idx > 0 && pmf.probabilities[idx] == 0.0) --idx;
    }
    return parents;
}

namespace {

// Pre-declared coefficient pairs for the constant policy. RF=2 uses the
// configured pair; RF=3/4 use fixed distinct pairs so refined layouts are
// reproducible in tests.
std::vector<std::pair<double, double>> constant_coefficients(const SamplerConfig& cfg) {
    switch (cfg.refinement_factor) {
        case 2:
            return {{cfg.constant_lambda_t, cfg.constant_lambda_x}};
        case 3:
            return {{-0.5, -0.5}, {0.5, 0.5}};
        case 4:
            return {{-0.5, -0.5}, {0.5, 0.5}, {0.5, -0.5}};
        default:
            throw ConfigError("constant coefficient policy is defined for refinement factors 2-4");
    }
}

}  // namespace

SampleBatch refine(const ReferenceGrid& grid, const std::vector<std::size_t>& parents,
                   const SamplerConfig& cfg, const DomainSpec& domain, Rng& rng) {
    if (parents.empty()) throw ConfigError("refine requires at least one parent");
    if (cfg.refinement_factor < 2) throw ConfigError("refinement factor must be >= 2");

    const int children_per_parent = cfg.refinement_factor - 1;
    SampleBatch batch;
    batch.parent_indices = parents;
    batch.refined_points.reserve(parents.size() * static_cast<std::size_t>(children_per_parent));

    std::vector<std::pair<double, double>> constant_pairs;
    if (cfg.coefficient_policy == CoefficientPolicy::Constant)
        constant_pairs = constant_coefficients(cfg);

    for (std::size_t parent : parents) {
        const auto [t_s, x_s] = grid.point(parent);
        for (int k = 0; k < children_per_parent; ++k) {
            double t_r, x_r;
            if (cfg.coefficient_policy == CoefficientPolicy::Random) {
                int guard = 0;
                do {
                    if (++guard > 100000)
                        throw NumericError("refinement coefficient redraw failed to terminate");
                    const double lt = rng.uniform(-1.0, 1.0);
                    const double lx = rng.uniform(-1.0, 1.0);
                    t_r = t_s + lt * grid.h_t;
                    x_r = x_s + lx * grid.h_x;
                } while (!domain.contains(t_r, x_r));
            } else {
                const auto [lt, lx] = constant_pairs[static_cast<std::size_t>(k)];
                t_r = std::clamp(t_s + lt * grid.h_t, 0.0, domain.t_max);
                x_r = std::clamp(x_s + lx * grid.h_x, domain.x_min, domain.x_max);
            }
            batch.refined_points.emplace_back(t_r, x_r);
        }
    }
    return batch;
}

SampleBatch asm1_select(const ReferenceGrid& grid, const ResidualField& residuals,
                        const SamplerConfig& cfg, Rng& rng) {
    const Pmf pmf = compute_pmf(residuals, cfg.pmf);
    SampleBatch batch;
    batch.parent_indices = sample_parents(pmf, cfg.points_per_event, rng);
    batch.refined_points.reserve(batch.parent_indices.size());
    for (std::size_t idx : batch.parent_indices) batch.refined_points.push_back(grid.point(idx));
    return batch;
}

SampleBatch asm2_select(const DomainSpec& domain, const ResidualEvaluator& residual_abs,
                        const SamplerConfig& cfg, Rng& rng) {
    if (cfg.asm2_candidate_pool < cfg.points_per_event)
        throw ConfigError("asm2 candidate pool smaller than points_per_event");

    const std::size_t pool = static_cast<std::size_t>(cfg.asm2_candidate_pool);
    std::vector<std::pair<double, double>> candidates(pool);
    std::vector<double> magnitude(pool);
    for (std::size_t i = 0; i < pool; ++i) {
        const double t = rng.uniform(0.0, domain.t_max);
        const double x = rng.uniform(domain.x_min, domain.x_max);
        candidates[i] = {t, x};
        magnitude[i] = residual_abs(t, x);
        if (!std::isfinite(magnitude[i]))
            throw NumericError("asm2 candidate residual is not finite");
    }

    std::vector<std::size_t> order(pool);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return magnitude[a] > magnitude[b]; });
    order.resize(static_cast<std::size_t>(cfg.points_per_event));
    std::sort(order.begin(), order.end());  // keep draw order among the selected

    SampleBatch batch;
    batch.refined_points.reserve(order.size());
    for (std::size_t i : order) batch.refined_points.push_back(candidates[i]);
    return batch;
}

SampleBatch asm3_resample(const ReferenceGrid& grid, const ResidualField& residuals,
                          const SamplerConfig& cfg, const DomainSpec& domain, Rng& rng) {
    const Pmf pmf = compute_pmf(residuals, cfg.pmf);
    const std::vector<std::size_t> parents = sample_parents(pmf, cfg.asm3_parent_count(), rng);
    return refine(grid, parents, cfg, domain, rng);
}

std::map<std::size_t, std::size_t> repetition_histogram(const std::vector<SampleBatch>& batches) {
    std::map<std::size_t, std::size_t> counts;
    for (const auto& batch : batches)
        for (std::size_t idx : batch.parent_indices) ++counts[idx];
    return counts;
}

void write_batches_csv(const std::string& path, const std::vector<SampleBatch>& batches,
                       const ReferenceGrid& grid) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot open batches csv for writing: " + path);
    f << "event,kind,t,x,parent_index\n";
    for (const auto& batch : batches) {
        const std::string event = std::to_string(batch.event_index);
        for (std::size_t idx : batch.parent_indices) {
            const auto [t, x] = grid.point(idx);
            f << join_csv_row({event, "parent", format_double(t), format_double(x),
                               std::to_string(idx)});
        }
        const int children_per_parent =
            batch.parent_indices.empty()
                ? 0
                : static_cast<int>(batch.refined_points.size() / batch.parent_indices.size());
        for (std::size_t i = 0; i < batch.refined_points.size(); ++i) {
            const auto& [t, x] = batch.refined_points[i];
            std::string parent;
            if (!batch.parent_indices.empty() && children_per_parent > 0) {
                const std::size_t parent_slot = i / static_cast<std::size_t>(children_per_parent);
                if (parent_slot < batch.parent_indices.size())
                    parent = std::to_string(batch.parent_indices[parent_slot]);
            }
            f << join_csv_row({event, "child", format_double(t), format_double(x), parent});
        }
    }
    if (!f) throw NumericError("batches csv write failed: " + path);
}

}  // namespace rpinn::sampling
