#include "spinmarket/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "spinmarket/csv.hpp"
#include "spinmarket/errors.hpp"

namespace spinmarket::svg {

namespace {

constexpr double kFigureWidth = 800.0;
constexpr double kPanelHeight = 320.0;
constexpr double kMarginLeft = 80.0;
constexpr double kMarginRight = 150.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 50.0;
constexpr double kTitleHeight = 30.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

bool plottable(double v, Scale scale) {
    return std::isfinite(v) && (scale == Scale::linear || v > 0.0);
}

double to_axis(double v, Scale scale) { return scale == Scale::log ? std::log10(v) : v; }
double from_axis(double u, Scale scale) { return scale == Scale::log ? std::pow(10.0, u) : u; }

std::pair<double, double> padded(double lo, double hi, Scale scale) {
    if (lo == hi) {
        const double pad = scale == Scale::log ? 0.5 : (lo == 0.0 ? 1.0 : std::abs(lo) * 0.1);
        return {lo - pad, hi + pad};
    }
    if (scale == Scale::log) return {std::floor(lo), std::ceil(hi)};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

std::vector<double> ticks(double lo, double hi, Scale scale) {
    std::vector<double> out;
    if (scale == Scale::log) {
        const int step = std::max(1, static_cast<int>(std::ceil((hi - lo) / 8.0)));
        for (int k = static_cast<int>(std::ceil(lo)); k <= static_cast<int>(std::floor(hi)); k += step) {
            out.push_back(k);
        }
        return out;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
        out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    }
    return out;
}

std::string tick_label(double u, Scale scale) {
    std::ostringstream os;
    if (scale == Scale::log) {
        os << "1e" << static_cast<int>(std::lround(u));
    } else {
        os << u;
    }
    return os.str();
}

}  // namespace

double PanelMapping::to_px(double x) const {
    return left + (to_axis(x, x_scale) - u_min) / (u_max - u_min) * width;
}

double PanelMapping::to_py(double y) const {
    return top + (v_max - to_axis(y, y_scale)) / (v_max - v_min) * height;
}

double PanelMapping::from_px(double px) const {
    return from_axis(u_min + (px - left) / width * (u_max - u_min), x_scale);
}

double PanelMapping::from_py(double py) const {
    return from_axis(v_max - (py - top) / height * (v_max - v_min), y_scale);
}

std::string render(const Figure& figure) {
    if (figure.panels.empty()) throw DataError("figure has no panels");

    const double total_height = kTitleHeight + static_cast<double>(figure.panels.size()) * kPanelHeight;
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kFigureWidth << "\" height=\"" << total_height
       << "\" viewBox=\"0 0 " << kFigureWidth << ' ' << total_height << "\" font-family=\"sans-serif\">\n";
    os << "<metadata>\n";
    for (const auto& [key, val] : figure.metadata) {
        os << "  <param name=\"" << escape(key) << "\" value=\"" << escape(val) << "\"/>\n";
    }
    os << "</metadata>\n";
    os << "<!-- panel data mapping: u = x or log10(x), v = y or log10(y); "
          "px = data-left + (u - data-u-min)/(data-u-max - data-u-min)*data-width; "
          "py = data-top + (data-v-max - v)/(data-v-max - data-v-min)*data-height -->\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kFigureWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"16\">"
       << escape(figure.title) << "</text>\n";

    for (std::size_t p = 0; p < figure.panels.size(); ++p) {
        const Panel& panel = figure.panels[p];
        double umin = std::numeric_limits<double>::infinity();
        double umax = -umin;
        double vmin = umin;
        double vmax = -umin;
        std::size_t points = 0;
        for (const auto& curve : panel.curves) {
            const std::size_t n = std::min(curve.x.size(), curve.y.size());
            for (std::size_t k = 0; k < n; ++k) {
                if (!plottable(curve.x[k], panel.x_scale) || !plottable(curve.y[k], panel.y_scale)) continue;
                const double u = to_axis(curve.x[k], panel.x_scale);
                const double v = to_axis(curve.y[k], panel.y_scale);
                umin = std::min(umin, u);
                umax = std::max(umax, u);
                vmin = std::min(vmin, v);
                vmax = std::max(vmax, v);
                ++points;
            }
        }
        if (points == 0) throw DataError("panel '" + panel.title + "' has no plottable points");

        PanelMapping map;
        map.x_scale = panel.x_scale;
        map.y_scale = panel.y_scale;
        std::tie(map.u_min, map.u_max) = padded(umin, umax, panel.x_scale);
        std::tie(map.v_min, map.v_max) = padded(vmin, vmax, panel.y_scale);
        map.left = kMarginLeft;
        map.top = kTitleHeight + static_cast<double>(p) * kPanelHeight + kMarginTop;
        map.width = kFigureWidth - kMarginLeft - kMarginRight;
        map.height = kPanelHeight - kMarginTop - kMarginBottom;

        os << "<g class=\"panel\" data-title=\"" << escape(panel.title) << "\" data-x-scale=\""
           << (panel.x_scale == Scale::log ? "log" : "linear") << "\" data-y-scale=\""
           << (panel.y_scale == Scale::log ? "log" : "linear") << "\" data-left=\"" << csv::format_double(map.left)
           << "\" data-top=\"" << csv::format_double(map.top) << "\" data-width=\""
           << csv::format_double(map.width) << "\" data-height=\"" << csv::format_double(map.height)
           << "\" data-u-min=\"" << csv::format_double(map.u_min) << "\" data-u-max=\""
           << csv::format_double(map.u_max) << "\" data-v-min=\"" << csv::format_double(map.v_min)
           << "\" data-v-max=\"" << csv::format_double(map.v_max) << "\">\n";

        os << "  <text x=\"" << map.left + map.width / 2 << "\" y=\"" << map.top - 10
           << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(panel.title) << "</text>\n";
        os << "  <rect x=\"" << map.left << "\" y=\"" << map.top << "\" width=\"" << map.width << "\" height=\""
           << map.height << "\" fill=\"none\" stroke=\"black\"/>\n";

        for (double u : ticks(map.u_min, map.u_max, panel.x_scale)) {
            const double px = map.left + (u - map.u_min) / (map.u_max - map.u_min) * map.width;
            const double base = map.top + map.height;
            os << "  <line x1=\"" << px << "\" y1=\"" << base << "\" x2=\"" << px << "\" y2=\"" << base + 5
               << "\" stroke=\"black\"/><text x=\"" << px << "\" y=\"" << base + 18
               << "\" text-anchor=\"middle\" font-size=\"10\">" << tick_label(u, panel.x_scale) << "</text>\n";
        }
        for (double v : ticks(map.v_min, map.v_max, panel.y_scale)) {
            const double py = map.top + (map.v_max - v) / (map.v_max - map.v_min) * map.height;
            os << "  <line x1=\"" << map.left - 5 << "\" y1=\"" << py << "\" x2=\"" << map.left << "\" y2=\"" << py
               << "\" stroke=\"black\"/><text x=\"" << map.left - 8 << "\" y=\"" << py + 3
               << "\" text-anchor=\"end\" font-size=\"10\">" << tick_label(v, panel.y_scale) << "</text>\n";
        }
        os << "  <text x=\"" << map.left + map.width / 2 << "\" y=\"" << map.top + map.height + 36
           << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(panel.x_label) << "</text>\n";
        os << "  <text transform=\"translate(" << map.left - 55 << ' ' << map.top + map.height / 2
           << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" << escape(panel.y_label) << "</text>\n";

        for (std::size_t c = 0; c < panel.curves.size(); ++c) {
            const Curve& curve = panel.curves[c];
            const char* color = curve.dashed ? "#000000" : kPalette[c % kPalette.size()];
            os << "  <polyline class=\"curve\" data-label=\"" << escape(curve.label) << "\" fill=\"none\" stroke=\""
               << color << "\" stroke-width=\"1\"" << (curve.dashed ? " stroke-dasharray=\"6 4\"" : "")
               << " points=\"";
            const std::size_t n = std::min(curve.x.size(), curve.y.size());
            bool first = true;
            for (std::size_t k = 0; k < n; ++k) {
                if (!plottable(curve.x[k], panel.x_scale) || !plottable(curve.y[k], panel.y_scale)) continue;
                if (!first) os << ' ';
                first = false;
                os << csv::format_double(map.to_px(curve.x[k])) << ',' << csv::format_double(map.to_py(curve.y[k]));
            }
            os << "\"/>\n";
            if (!curve.dashed) {
                const double ly = map.top + 14.0 * static_cast<double>(c + 1);
                os << "  <text x=\"" << map.left + map.width + 10 << "\" y=\"" << ly << "\" font-size=\"11\" fill=\""
                   << color << "\">" << escape(curve.label) << "</text>\n";
            }
        }
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write(const std::filesystem::path& path, const Figure& figure) {
    const std::string text = render(figure);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace spinmarket::svg
