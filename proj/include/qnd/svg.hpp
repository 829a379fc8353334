#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace qnd {

// One polyline of a figure. Points with non-finite coordinates are skipped.
struct SvgSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    double width = 1.5;
    double opacity = 1.0;
    bool dashed = false;
    std::string label;  // drawn in the legend when non-empty
};

// Self-contained SVG line plot: axes, tick labels, legend, no external deps.
void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series);

}  // namespace qnd
