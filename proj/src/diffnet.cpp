#include "rpinn/diffnet.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace rpinn::diffnet {

void NetworkConfig::validate() const {
    if (layer_sizes.size() < 2) throw ConfigError("network.layer_sizes needs at least two entries");
    if (layer_sizes.front() != 2) throw ConfigError("network.layer_sizes must start with 2 (t, x)");
    if (layer_sizes.back() != 1) throw ConfigError("network.layer_sizes must end with 1");
    for (int n : layer_sizes)
        if (n <= 0) throw ConfigError("network.layer_sizes entries must be positive");
    if (!(input_scale_t > 0.0) || !std::isfinite(input_scale_t))
        throw ConfigError("network.input_scale_t must be a positive finite real");
    if (!(input_scale_x > 0.0) || !std::isfinite(input_scale_x))
        throw ConfigError("network.input_scale_x must be a positive finite real");
}

bool NetworkParams::congruent_with(const NetworkParams& other) const {
    if (weights.size() != other.weights.size() || biases.size() != other.biases.size())
        return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != other.weights[l].rows()) return false;
        if (weights[l].cols() != other.weights[l].cols()) return false;
        if (biases[l].size() != other.biases[l].size()) return false;
    }
    return true;
}

bool NetworkParams::all_finite() const {
    for (const auto& w : weights)
        if (!w.allFinite()) return false;
    for (const auto& b : biases)
        if (!b.allFinite()) return false;
    return true;
}

std::size_t NetworkParams::scalar_count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
    for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
    return n;
}

void NetworkParams::set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
}

NetworkParams init_params(const NetworkConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    NetworkParams params;
    const int layers = config.layer_count();
    params.weights.reserve(static_cast<std::size_t>(layers));
    params.biases.reserve(static_cast<std::size_t>(layers));
    for (int l = 0; l < layers; ++l) {
        const int fan_in = config.layer_sizes[static_cast<std::size_t>(l)];
        const int fan_out = config.layer_sizes[static_cast<std::size_t>(l) + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) w(i, j) = limit * (2.0 * rng.uniform01() - 1.0);
        params.weights.push_back(std::move(w));
        params.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return params;
}

ParamGradient zero_gradient(const NetworkConfig& config) {
    ParamGradient g;
    const int layers = config.layer_count();
    for (int l = 0; l < layers; ++l) {
        const int in = config.layer_sizes[static_cast<std::size_t>(l)];
        const int out = config.layer_sizes[static_cast<std::size_t>(l) + 1];
        g.weights.push_back(Eigen::MatrixXd::Zero(out, in));
        g.biases.push_back(Eigen::VectorXd::Zero(out));
    }
    return g;
}

namespace {

using Eigen::ArrayXd;
using Eigen::VectorXd;

// Per-evaluation buffers sized once per network shape and reused across
// residual terms; avoids heap churn in the training hot loop.
struct Workspace {
    // forward state; a[l] is the input to affine layer l, z[l] its output
    std::vector<VectorXd> a, z;
    std::vector<VectorXd> ad[2], add[2], zd[2], zdd[2];  // indexed by Axis
    // reverse state
    std::vector<VectorXd> gz, gzd[2], gzdd[2];
    VectorXd ga, gad[2], gadd[2];
    ArrayXd p, q, r, tmp;

    explicit Workspace(const NetworkConfig& cfg) {
        const int layers = cfg.layer_count();
        auto sized = [&](int offset) {
            std::vector<VectorXd> v;
            for (int l = 0; l < layers; ++l)
                v.emplace_back(cfg.layer_sizes[static_cast<std::size_t>(l + offset)]);
            return v;
        };
        a = sized(0);
        z = sized(1);
        gz = sized(1);
        for (int ax = 0; ax < 2; ++ax) {
            ad[ax] = sized(0);
            add[ax] = sized(0);
            zd[ax] = sized(1);
            zdd[ax] = sized(1);
            gzd[ax] = sized(1);
            gzdd[ax] = sized(1);
        }
    }
};

inline double activate(Activation act, double z) {
    return act == Activation::Sigmoid ? 1.0 / (1.0 + std::exp(-z)) : std::tanh(z);
}

// First three derivatives of the activation expressed through its value s.
// sigmoid: s' = s(1-s), s'' = s'(1-2s), s''' = s''(1-2s) - 2 s'^2
// tanh:    s' = 1-s^2,  s'' = -2 s s',  s''' = -2 s'^2 - 2 s s''
inline void activation_derivs(Activation act, const VectorXd& s_vec, ArrayXd& p, ArrayXd& q,
                              ArrayXd& r, bool need_r) {
    const auto s = s_vec.array();
    if (act == Activation::Sigmoid) {
        p = s * (1.0 - s);
        q = p * (1.0 - 2.0 * s);
        if (need_r) r = q * (1.0 - 2.0 * s) - 2.0 * p * p;
    } else {
        p = 1.0 - s * s;
        q = -2.0 * s * p;
        if (need_r) r = -2.0 * p * p - 2.0 * s * q;
    }
}

struct JetOutputs {
    double value = 0.0;
    double d1[2] = {0.0, 0.0};
    double d2[2] = {0.0, 0.0};
};

// Forward pass carrying up to two directional second-order Taylor chains.
// The t chain is seeded with the input-scale factor, so every derivative is
// with respect to the raw coordinate.
JetOutputs forward_pass(const NetworkParams& params, const NetworkConfig& cfg, double t, double x,
                        bool want_t, bool want_x, Workspace& ws) {
    const int layers = cfg.layer_count();
    const bool want[2] = {want_t, want_x};

    ws.a[0].resize(2);
    ws.a[0] << t * cfg.input_scale_t, x * cfg.input_scale_x;
    if (want_t) {
        ws.ad[0][0].resize(2);
        ws.ad[0][0] << cfg.input_scale_t, 0.0;
        ws.add[0][0].setZero(2);
    }
    if (want_x) {
        ws.ad[1][0].resize(2);
        ws.ad[1][0] << 0.0, cfg.input_scale_x;
        ws.add[1][0].setZero(2);
    }

    for (int l = 0; l < layers; ++l) {
        const auto& w = params.weights[static_cast<std::size_t>(l)];
        const auto& b = params.biases[static_cast<std::size_t>(l)];
        ws.z[l].noalias() = w * ws.a[l];
        ws.z[l] += b;
        for (int ax = 0; ax < 2; ++ax) {
            if (!want[ax]) continue;
            ws.zd[ax][l].noalias() = w * ws.ad[ax][l];
            ws.zdd[ax][l].noalias() = w * ws.add[ax][l];
        }
        if (l + 1 < layers) {
            ws.a[l + 1] = ws.z[l].unaryExpr(
                [&](double v) { return activate(cfg.activation, v); });
            if (want_t || want_x) {
                activation_derivs(cfg.activation, ws.a[l + 1], ws.p, ws.q, ws.r, false);
                for (int ax = 0; ax < 2; ++ax) {
                    if (!want[ax]) continue;
                    const auto zd = ws.zd[ax][l].array();
                    const auto zdd = ws.zdd[ax][l].array();
                    ws.add[ax][l + 1] = (ws.q * zd * zd + ws.p * zdd).matrix();
                    ws.ad[ax][l + 1] = (ws.p * zd).matrix();
                }
            }
        }
    }

    JetOutputs out;
    out.value = ws.z[layers - 1](0);
    for (int ax = 0; ax < 2; ++ax) {
        if (!want[ax]) continue;
        out.d1[ax] = ws.zd[ax][layers - 1](0);
        out.d2[ax] = ws.zdd[ax][layers - 1](0);
    }
    return out;
}

// Reverse pass over the jet computation recorded in `ws`. Seeds are the
// loss derivatives with respect to the output value and each active chain's
// first/second derivative; parameter adjoints accumulate into `grad`.
void reverse_pass(const NetworkParams& params, const NetworkConfig& cfg, Workspace& ws,
                  bool want_t, bool want_x, double seed_value, const double seed_d1[2],
                  const double seed_d2[2], ParamGradient& grad) {
    const int layers = cfg.layer_count();
    const bool want[2] = {want_t, want_x};

    ws.gz[layers - 1].setZero();
    ws.gz[layers - 1](0) = seed_value;
    for (int ax = 0; ax < 2; ++ax) {
        if (!want[ax]) continue;
        ws.gzd[ax][layers - 1].setZero();
        ws.gzd[ax][layers - 1](0) = seed_d1[ax];
        ws.gzdd[ax][layers - 1].setZero();
        ws.gzdd[ax][layers - 1](0) = seed_d2[ax];
    }

    for (int l = layers - 1; l >= 0; --l) {
        const auto& w = params.weights[static_cast<std::size_t>(l)];
        auto& gw = grad.weights[static_cast<std::size_t>(l)];
        auto& gb = grad.biases[static_cast<std::size_t>(l)];

        gw.noalias() += ws.gz[l] * ws.a[l].transpose();
        gb += ws.gz[l];
        for (int ax = 0; ax < 2; ++ax) {
            if (!want[ax]) continue;
            gw.noalias() += ws.gzd[ax][l] * ws.ad[ax][l].transpose();
            gw.noalias() += ws.gzdd[ax][l] * ws.add[ax][l].transpose();
        }
        if (l == 0) break;

        ws.ga.noalias() = w.transpose() * ws.gz[l];
        for (int ax = 0; ax < 2; ++ax) {
            if (!want[ax]) continue;
            ws.gad[ax].noalias() = w.transpose() * ws.gzd[ax][l];
            ws.gadd[ax].noalias() = w.transpose() * ws.gzdd[ax][l];
        }

        // undo the activation that produced a[l] from z[l-1]
        activation_derivs(cfg.activation, ws.a[l], ws.p, ws.q, ws.r, want_t || want_x);
        ws.tmp = ws.ga.array() * ws.p;
        for (int ax = 0; ax < 2; ++ax) {
            if (!want[ax]) continue;
            const auto zd = ws.zd[ax][l - 1].array();
            const auto zdd = ws.zdd[ax][l - 1].array();
            const auto gad = ws.gad[ax].array();
            const auto gadd = ws.gadd[ax].array();
            ws.tmp += gad * ws.q * zd + gadd * (ws.r * zd * zd + ws.q * zdd);
            ws.gzd[ax][l - 1] = (gad * ws.p + gadd * (2.0 * ws.q * zd)).matrix();
            ws.gzdd[ax][l - 1] = (gadd * ws.p).matrix();
        }
        ws.gz[l - 1] = ws.tmp.matrix();
    }
}

void check_params(const NetworkParams& params, const NetworkConfig& cfg) {
    if (static_cast<int>(params.weights.size()) != cfg.layer_count() ||
        static_cast<int>(params.biases.size()) != cfg.layer_count())
        throw ConfigError("parameter layer count does not match network config");
}

void check_inputs(double t, double x) {
    if (!std::isfinite(t) || !std::isfinite(x))
        throw DomainError("network inputs must be finite");
}

struct TermEval {
    double residual = 0.0;
    double contribution = 0.0;
    bool want_t = false;
    bool want_x = false;
    JetOutputs jets;
};

TermEval eval_term(const NetworkParams& params, const NetworkConfig& cfg,
                   const ResidualTerm& term, std::size_t index, Workspace& ws) {
    TermEval ev;
    ev.want_t = term.dt_coeff != 0.0;
    ev.want_x = term.dx_coeff != 0.0 || term.dxx_coeff != 0.0;
    ev.jets = forward_pass(params, cfg, term.t, term.x, ev.want_t, ev.want_x, ws);
    ev.residual = term.value_coeff * ev.jets.value + term.dt_coeff * ev.jets.d1[0] +
                  term.dx_coeff * ev.jets.d1[1] + term.dxx_coeff * ev.jets.d2[1] + term.constant;
    ev.contribution = term.weight * ev.residual * ev.residual;
    if (!std::isfinite(ev.contribution))
        throw NumericError("non-finite loss contribution from term " + std::to_string(index) +
                           " (group " + std::to_string(term.group) + ") at t=" +
                           format_double(term.t) + " x=" + format_double(term.x));
    return ev;
}

}  // namespace

double forward(const NetworkParams& params, const NetworkConfig& config, double t, double x) {
    return forward_jet(params, config, t, x, Axis::T).value;
}

Jet2 forward_jet(const NetworkParams& params, const NetworkConfig& config, double t, double x,
                 Axis axis) {
    check_params(params, config);
    check_inputs(t, x);
    Workspace ws(config);
    const bool is_t = axis == Axis::T;
    JetOutputs out = forward_pass(params, config, t, x, is_t, !is_t, ws);
    const int ax = is_t ? 0 : 1;
    return Jet2{out.value, out.d1[ax], out.d2[ax]};
}

LossBreakdown loss_value(const NetworkParams& params, const NetworkConfig& config,
                         const LossSpec& spec) {
    check_params(params, config);
    Workspace ws(config);
    LossBreakdown out;
    out.by_group.assign(static_cast<std::size_t>(spec.group_count), 0.0);
    for (std::size_t i = 0; i < spec.terms.size(); ++i) {
        const TermEval ev = eval_term(params, config, spec.terms[i], i, ws);
        out.by_group[static_cast<std::size_t>(spec.terms[i].group)] += ev.contribution;
    }
    for (double g : out.by_group) out.total += g;
    return out;
}

LossAndGradient loss_gradient(const NetworkParams& params, const NetworkConfig& config,
                              const LossSpec& spec) {
    check_params(params, config);
    Workspace ws(config);
    LossAndGradient out;
    out.loss.by_group.assign(static_cast<std::size_t>(spec.group_count), 0.0);
    out.grad = zero_gradient(config);
    for (std::size_t i = 0; i < spec.terms.size(); ++i) {
        const ResidualTerm& term = spec.terms[i];
        const TermEval ev = eval_term(params, config, term, i, ws);
        out.loss.by_group[static_cast<std::size_t>(term.group)] += ev.contribution;

        const double lam = 2.0 * term.weight * ev.residual;
        const double seed_d1[2] = {lam * term.dt_coeff, lam * term.dx_coeff};
        const double seed_d2[2] = {0.0, lam * term.dxx_coeff};
        reverse_pass(params, config, ws, ev.want_t, ev.want_x, lam * term.value_coeff, seed_d1,
                     seed_d2, out.grad);
    }
    for (double g : out.loss.by_group) out.loss.total += g;
    return out;
}

namespace {

constexpr char kMagic[4] = {'P', 'I', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw NumericError("checkpoint truncated");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const NetworkParams& params) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open checkpoint for writing: " + path);
    f.write(kMagic, 4);
    write_pod(f, kVersion);
    const auto layers = static_cast<std::uint32_t>(params.weights.size());
    write_pod(f, static_cast<std::uint32_t>(layers + 1));
    write_pod(f, static_cast<std::uint32_t>(params.weights.front().cols()));
    for (std::uint32_t l = 0; l < layers; ++l)
        write_pod(f, static_cast<std::uint32_t>(params.weights[l].rows()));
    for (std::uint32_t l = 0; l < layers; ++l) {
        const auto& w = params.weights[l];
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) write_pod(f, w(i, j));
        const auto& b = params.biases[l];
        for (Eigen::Index i = 0; i < b.size(); ++i) write_pod(f, b(i));
    }
    if (!f) throw NumericError("checkpoint write failed: " + path);
}

NetworkParams load_checkpoint(const std::string& path, std::vector<int>* layer_sizes_out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open checkpoint: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw ConfigError("not a network checkpoint: " + path);
    if (read_pod<std::uint32_t>(f) != kVersion)
        throw ConfigError("unsupported checkpoint version: " + path);
    const auto n_sizes = read_pod<std::uint32_t>(f);
    if (n_sizes < 2 || n_sizes > 1024) throw ConfigError("corrupt checkpoint header: " + path);
    std::vector<int> sizes(n_sizes);
    for (auto& s : sizes) s = static_cast<int>(read_pod<std::uint32_t>(f));
    NetworkParams params;
    for (std::uint32_t l = 0; l + 1 < n_sizes; ++l) {
        Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = read_pod<double>(f);
        Eigen::VectorXd b(sizes[l + 1]);
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = read_pod<double>(f);
        params.weights.push_back(std::move(w));
        params.biases.push_back(std::move(b));
    }
    if (layer_sizes_out) *layer_sizes_out = sizes;
    return params;
}

}  // namespace rpinn::diffnet
