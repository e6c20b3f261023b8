#include "rpinn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace rpinn::metrics {

EvalGrid make_eval_grid(const pde::DomainSpec& domain, int t_count, int x_count) {
    if (t_count < 2 || x_count < 2) throw ConfigError("eval grid needs at least 2 nodes per axis");
    domain.validate();
    EvalGrid grid;
    grid.t_values.resize(static_cast<std::size_t>(t_count));
    grid.x_values.resize(static_cast<std::size_t>(x_count));
    for (int i = 0; i < t_count; ++i)
        grid.t_values[static_cast<std::size_t>(i)] = domain.t_max * i / (t_count - 1);
    grid.t_values.back() = domain.t_max;
    for (int i = 0; i < x_count; ++i)
        grid.x_values[static_cast<std::size_t>(i)] =
            domain.x_min + domain.x_extent() * i / (x_count - 1);
    grid.x_values.back() = domain.x_max;
    return grid;
}

double relative_l2(const std::vector<double>& pred, const std::vector<double>& ref) {
    if (pred.size() != ref.size() || pred.empty())
        throw ConfigError("relative_l2 needs two equal-length non-empty fields");
    double err2 = 0.0, ref2 = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - ref[i];
        err2 += d * d;
        ref2 += ref[i] * ref[i];
    }
    if (ref2 == 0.0) throw NumericError("relative_l2 reference field is identically zero");
    return std::sqrt(err2) / std::sqrt(ref2);
}

double r_squared(const std::vector<double>& pred, const std::vector<double>& ref) {
    if (pred.size() != ref.size() || pred.size() < 2)
        throw ConfigError("r_squared needs two equal-length series with at least 2 entries");
    double mean = 0.0;
    for (double v : ref) mean += v;
    mean /= static_cast<double>(ref.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double r = pred[i] - ref[i];
        const double d = ref[i] - mean;
        ss_res += r * r;
        ss_tot += d * d;
    }
    if (ss_tot == 0.0) throw NumericError("r_squared reference series has zero variance");
    return 1.0 - ss_res / ss_tot;
}

sampling::ResidualField residual_field_on(const std::vector<std::pair<double, double>>& points,
                                          const pde::JetProvider& net,
                                          const pde::MediumProperties& props) {
    sampling::ResidualField field;
    field.values.reserve(points.size());
    for (const auto& [t, x] : points)
        field.values.push_back(std::abs(pde::pde_residual(net, props, t, x)));
    field.validate();
    return field;
}

void write_heatmap_csv(const std::string& path,
                       const std::vector<std::pair<double, double>>& points,
                       const std::vector<double>& values) {
    if (points.size() != values.size())
        throw ConfigError("heatmap points and values have different lengths");
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot open heatmap csv for writing: " + path);
    f << "t,x,value\n";
    for (std::size_t i = 0; i < points.size(); ++i)
        f << join_csv_row({format_double(points[i].first), format_double(points[i].second),
                           format_double(values[i])});
    if (!f) throw NumericError("heatmap csv write failed: " + path);
}

namespace {

// Blue -> white -> red linear ramp.
std::string color_for(double fraction) {
    fraction = std::clamp(fraction, 0.0, 1.0);
    int red, green, blue;
    if (fraction < 0.5) {
        const double u = fraction / 0.5;
        red = static_cast<int>(40 + 215 * u);
        green = static_cast<int>(60 + 195 * u);
        blue = 255;
    } else {
        const double u = (fraction - 0.5) / 0.5;
        red = 255;
        green = static_cast<int>(255 - 195 * u);
        blue = static_cast<int>(255 - 215 * u);
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", red, green, blue);
    return buf;
}

}  // namespace

void write_heatmap_svg(const std::string& path, const std::vector<double>& t_values,
                       const std::vector<double>& x_values, const std::vector<double>& row_major,
                       const std::string& title) {
    const std::size_t nt = t_values.size();
    const std::size_t nx = x_values.size();
    if (nt * nx != row_major.size() || nt == 0 || nx == 0)
        throw ConfigError("heatmap dimensions do not match the value table");

    double lo = row_major[0], hi = row_major[0];
    for (double v : row_major) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;

    const double plot_w = 720.0, plot_h = 420.0, margin = 60.0;
    const double cell_w = plot_w / static_cast<double>(nt);
    const double cell_h = plot_h / static_cast<double>(nx);

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot open heatmap svg for writing: " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot_w + 2 * margin
      << "\" height=\"" << plot_h + 2 * margin << "\">\n";
    f << "<text x=\"" << margin << "\" y=\"" << margin - 30
      << "\" font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
    f << "<text x=\"" << margin << "\" y=\"" << margin - 10
      << "\" font-family=\"sans-serif\" font-size=\"12\">min=" << format_double(lo)
      << " max=" << format_double(hi) << "</text>\n";
    for (std::size_t it = 0; it < nt; ++it) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const double v = row_major[it * nx + ix];
            const double px = margin + static_cast<double>(it) * cell_w;
            // x axis drawn upward
            const double py = margin + plot_h - static_cast<double>(ix + 1) * cell_h;
            f << "<rect x=\"" << px << "\" y=\"" << py << "\" width=\"" << cell_w + 0.5
              << "\" height=\"" << cell_h + 0.5 << "\" fill=\"" << color_for((v - lo) / span)
              << "\"/>\n";
        }
    }
    f << "<text x=\"" << margin + plot_w / 2 << "\" y=\"" << margin + plot_h + 30
      << "\" font-family=\"sans-serif\" font-size=\"12\">t</text>\n";
    f << "<text x=\"" << margin - 30 << "\" y=\"" << margin + plot_h / 2
      << "\" font-family=\"sans-serif\" font-size=\"12\">x</text>\n";
    f << "</svg>\n";
    if (!f) throw NumericError("heatmap svg write failed: " + path);
}

}  // namespace rpinn::metrics
