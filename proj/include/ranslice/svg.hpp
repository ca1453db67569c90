#pragma once

// Minimal SVG line charts for the result figures. CSV stays the
// authoritative output; these are for eyeballing.

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ranslice::svg {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
    bool markers = true;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::optional<double> y_min;  // default: fitted to the data (0 included)
    std::optional<double> y_max;
    std::optional<double> reference_y;  // dashed horizontal line, e.g. a threshold
    std::string reference_label;
    int width = 720;
    int height = 420;
};

std::string line_chart(const ChartSpec& spec, const std::vector<Series>& series);

// Roughly five round tick values spanning [lo, hi].
std::vector<double> nice_ticks(double lo, double hi);

}  // namespace ranslice::svg
