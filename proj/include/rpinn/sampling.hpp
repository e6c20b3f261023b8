#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "rpinn/common.hpp"
#include "rpinn/pde.hpp"

namespace rpinn::sampling {

using pde::DomainSpec;

// Fixed equi-spaced residual-point set defined once and kept for the whole
// training run. Points are the Cartesian product of the axis nodes, indexed
// row-major: index = it * x_count + ix.
struct ReferenceGrid {
    std::vector<double> t_nodes;
    std::vector<double> x_nodes;
    double h_t = 0.0;
    double h_x = 0.0;

    std::size_t size() const { return t_nodes.size() * x_nodes.size(); }
    std::pair<double, double> point(std::size_t index) const {
        const std::size_t nx = x_nodes.size();
        return {t_nodes[index / nx], x_nodes[index % nx]};
    }
};

// |PDE residual| magnitudes aligned index-for-index with some point list.
struct ResidualField {
    std::vector<double> values;

    void validate() const;
};

struct PmfConfig {
    double exponent = 2.0;  // k
    double offset = 0.0;    // c

    void validate() const;
};

struct Pmf {
    std::vector<double> probabilities;
};

enum class Method { None, Asm1, Asm2, Asm3 };

enum class CoefficientPolicy { Random, Constant };

struct SamplerConfig {
    Method method = Method::Asm3;
    int points_per_event = 150;
    int refinement_factor = 2;
    CoefficientPolicy coefficient_policy = CoefficientPolicy::Random;
    double constant_lambda_t = 0.5;  // constant policy, RF = 2
    double constant_lambda_x = 0.5;
    int asm2_candidate_pool = 1500;
    PmfConfig pmf;
    std::uint64_t seed = 0;
    // Batch retention across events. Defaults per method: ASM3 replaces its
    // previous batch, ASM1/ASM2 accumulate. -1 keeps the default.
    int accumulate_override = -1;

    bool accumulates() const;
    void validate() const;
    // parents per ASM3 event: points_per_event / (RF - 1), rounded, min 1
    int asm3_parent_count() const;
};

// One resampling event's output. For ASM3, refined_points holds the
// (RF-1) * |parents| children; for ASM1 it repeats the parents' own
// coordinates; for ASM2 parent_indices is empty.
struct SampleBatch {
    std::vector<std::size_t> parent_indices;
    std::vector<std::pair<double, double>> refined_points;
    int event_index = 0;
};

ReferenceGrid build_reference_grid(const DomainSpec& domain, int t_count, int x_count);

// p_i = (eps_i^k / mean(eps^k) + c) normalized to sum 1. All-zero residuals
// with c = 0 have no mass to distribute and raise
// DegenerateDistributionError.
Pmf compute_pmf(const ResidualField& residuals, const PmfConfig& cfg);

// `count` independent draws with replacement via CDF inversion.
std::vector<std::size_t> sample_parents(const Pmf& pmf, int count, Rng& rng);

// Direct grid refinement: each parent (t_s, x_s) gains RF-1 children at
// (t_s + lambda_t h_t, x_s + lambda_x h_x). Random policy redraws
// coefficients until the child lands inside the domain; constant policy
// clamps coordinates to the domain box.
SampleBatch refine(const ReferenceGrid& grid, const std::vector<std::size_t>& parents,
                   const SamplerConfig& cfg, const DomainSpec& domain, Rng& rng);

SampleBatch asm1_select(const ReferenceGrid& grid, const ResidualField& residuals,
                        const SamplerConfig& cfg, Rng& rng);

using ResidualEvaluator = std::function<double(double t, double x)>;

// Uniform candidate pool over the domain rectangle, keep the
// points_per_event candidates with the largest |residual| (ties keep draw
// order).
SampleBatch asm2_select(const DomainSpec& domain, const ResidualEvaluator& residual_abs,
                        const SamplerConfig& cfg, Rng& rng);

// Steps 2 + 3: PMF parents from the reference grid, then refinement.
SampleBatch asm3_resample(const ReferenceGrid& grid, const ResidualField& residuals,
                          const SamplerConfig& cfg, const DomainSpec& domain, Rng& rng);

// Count how often each reference index was sampled as a parent across
// events.
std::map<std::size_t, std::size_t> repetition_histogram(const std::vector<SampleBatch>& batches);

// CSV export: event,kind,t,x,parent_index (parent_index empty for ASM2
// candidates that have no grid parent).
void write_batches_csv(const std::string& path, const std::vector<SampleBatch>& batches,
                       const ReferenceGrid& grid);

}  // namespace rpinn::sampling
