#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "smobank/simlab.hpp"

// Minimal line plots in a fixed 800x500 viewBox. Every polyline carries a
// data-column attribute naming the trace.csv column it was drawn from.
namespace smobank {

struct PlotSeries {
    std::string column; // trace.csv column name
    std::string label;
    std::vector<double> y;
    bool dashed = false;
};

struct PlotPanel {
    std::string title;
    std::vector<PlotSeries> series;
};

inline constexpr std::size_t kMaxPlotPoints = 2000;

// Panels are stacked vertically and share the time axis.
[[nodiscard]] std::string render_svg(const std::string& title, const std::vector<double>& t,
                                     const std::vector<PlotPanel>& panels);

[[nodiscard]] std::string states_svg(const SimTrace& tr);  // x_i vs xo_i per component
[[nodiscard]] std::string fault_svg(const SimTrace& tr);   // xi vs xi_hat
[[nodiscard]] std::string weights_svg(const SimTrace& tr); // alpha_i

void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace smobank
