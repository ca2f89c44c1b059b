#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace spinmarket::svg {

enum class Scale { linear, log };

struct Curve {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    Scale x_scale = Scale::linear;
    Scale y_scale = Scale::linear;
    std::vector<Curve> curves;
};

struct Figure {
    std::string title;
    std::vector<Panel> panels;
    /// Written into <metadata> as key/value pairs (generating parameters).
    std::map<std::string, std::string> metadata;
};

/// Data-to-pixel mapping of one panel. With u = x (or log10 x on a log axis)
/// and v likewise for y:
///   px = left + (u - u_min) / (u_max - u_min) * width
///   py = top + (v_max - v) / (v_max - v_min) * height
/// The same numbers are written as data-* attributes on the panel's <g>
/// element, and polyline coordinates use shortest round-trip decimals, so
/// every plotted point can be mapped back exactly.
struct PanelMapping {
    double left = 0, top = 0, width = 0, height = 0;
    double u_min = 0, u_max = 1, v_min = 0, v_max = 1;
    Scale x_scale = Scale::linear;
    Scale y_scale = Scale::linear;

    double to_px(double x) const;
    double to_py(double y) const;
    double from_px(double px) const;
    double from_py(double py) const;
};

/// Points with non-finite coordinates, or non-positive ones on a log axis,
/// are left out. Throws DataError if the figure has no panels or a panel has
/// no plottable point.
std::string render(const Figure& figure);
void write(const std::filesystem::path& path, const Figure& figure);

}  // namespace spinmarket::svg
