#include "spinmarket/figures.hpp"

#include <cmath>

#include "spinmarket/errors.hpp"

namespace spinmarket::figures {

AcfAxes parse_acf_axes(std::string_view text) {
    if (text == "linear") return AcfAxes::linear;
    if (text == "semilog") return AcfAxes::semilog;
    if (text == "loglog") return AcfAxes::loglog;
    throw ConfigError("axes must be one of linear, semilog, loglog; got '" + std::string(text) + "'");
}

AcfColumn parse_acf_column(std::string_view text) {
    if (text == "c_r") return AcfColumn::c_r;
    if (text == "c_abs_r") return AcfColumn::c_abs_r;
    if (text == "both") return AcfColumn::both;
    throw ConfigError("column must be one of c_r, c_abs_r, both; got '" + std::string(text) + "'");
}

svg::Figure returns_figure(const std::vector<std::pair<std::string, Series>>& series) {
    svg::Figure fig;
    fig.title = "Returns r(t)";
    for (const auto& [label, s] : series) {
        if (s.empty()) throw DataError("series '" + label + "' is empty");
        svg::Panel panel;
        panel.title = label;
        panel.x_label = "t";
        panel.y_label = "r(t)";
        svg::Curve curve;
        curve.label = label;
        curve.y = s.values;
        curve.x.reserve(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) curve.x.push_back(static_cast<double>(s.t0 + static_cast<std::int64_t>(i)));
        panel.curves.push_back(std::move(curve));
        fig.panels.push_back(std::move(panel));
    }
    return fig;
}

svg::Figure histogram_figure(const std::vector<std::pair<std::string, csv::HistogramTable>>& histograms,
                             bool shift) {
    svg::Figure fig;
    fig.title = "Histogram of standardized returns";
    fig.metadata["vertical_shift"] = shift ? "curve k scaled by 10^k" : "none";
    svg::Panel panel;
    panel.x_label = "r / sigma_r";
    panel.y_label = shift ? "count (shifted)" : "count";
    panel.y_scale = svg::Scale::log;
    for (std::size_t k = 0; k < histograms.size(); ++k) {
        const auto& [label, h] = histograms[k];
        double total = 0.0;
        for (double c : h.count) total += c;
        if (h.count.empty() || total == 0.0) throw DataError("histogram '" + label + "' is empty");
        const double factor = shift ? std::pow(10.0, static_cast<double>(k)) : 1.0;
        svg::Curve counts{label, {}, {}, false};
        svg::Curve gauss{label + " gaussian", {}, {}, true};
        for (std::size_t b = 0; b < h.count.size(); ++b) {
            const double centre = 0.5 * (h.bin_lo[b] + h.bin_hi[b]);
            counts.x.push_back(centre);
            counts.y.push_back(h.count[b] * factor);
            gauss.x.push_back(centre);
            gauss.y.push_back(h.gaussian_expected[b] * factor);
        }
        panel.curves.push_back(std::move(counts));
        panel.curves.push_back(std::move(gauss));
    }
    if (panel.curves.empty()) throw DataError("no histograms to plot");
    fig.panels.push_back(std::move(panel));
    return fig;
}

svg::Figure autocorrelation_figure(const csv::AutocorrelationTable& table, AcfColumn column,
                                   const std::vector<AcfAxes>& axes) {
    if (table.c_r.empty()) throw DataError("autocorrelation table is empty");
    svg::Figure fig;
    fig.title = "Autocorrelation";
    for (AcfAxes style : axes) {
        svg::Panel panel;
        panel.x_label = "tau";
        panel.y_label = "C(tau)";
        panel.x_scale = style == AcfAxes::loglog ? svg::Scale::log : svg::Scale::linear;
        panel.y_scale = style == AcfAxes::linear ? svg::Scale::linear : svg::Scale::log;
        panel.title = style == AcfAxes::linear ? "linear" : (style == AcfAxes::semilog ? "semi-log" : "log-log");
        auto add = [&](const std::string& label, const Series& c) {
            svg::Curve curve{label, {}, {}, false};
            for (std::size_t k = 0; k < c.size(); ++k) {
                curve.x.push_back(static_cast<double>(c.t0 + static_cast<std::int64_t>(k)));
                curve.y.push_back(c[k]);
            }
            panel.curves.push_back(std::move(curve));
        };
        if (column != AcfColumn::c_abs_r) add("c_r", table.c_r);
        if (column != AcfColumn::c_r) add("c_abs_r", table.c_abs_r);
        fig.panels.push_back(std::move(panel));
    }
    return fig;
}

}  // namespace spinmarket::figures
