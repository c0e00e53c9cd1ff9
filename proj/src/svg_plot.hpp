#pragma once

#include "data.hpp"

#include <string>
#include <vector>

namespace phenoflow {

/// Paper color scheme for warming categories: A blue, B red, C yellow,
/// D green, E orange.
std::string category_color(Category category);

struct SeasonPlot {
    std::string title;
    std::vector<std::pair<double, double>> samples; // (week, ndvi)
    std::vector<std::pair<double, double>> curve;   // fitted curve polyline
    double sos = -1.0; // vertical marker, skipped when negative
    double pos = -1.0;
    std::string color = "#1f77b4";
};

void write_season_svg(const std::string& path, const SeasonPlot& plot);

struct Bar {
    std::string label;
    double value = 0.0;
    std::string color = "#1f77b4";
};

struct BarChart {
    std::string title;
    std::string y_label;
    std::vector<Bar> bars;
};

void write_bar_chart_svg(const std::string& path, const BarChart& chart);

} // namespace phenoflow
