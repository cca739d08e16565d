#pragma once

// Self-contained SVG charts: time-series line charts and a heatmap.

#include <string>
#include <vector>

namespace extrude::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChartOptions {
  std::string title;
  std::string x_label = "t [s]";
  std::string y_label;
  int width = 800;
  int height = 420;
  std::size_t max_points = 2000;  // per series, decimated by stride
};

[[nodiscard]] std::string line_chart(const std::vector<Series>& series,
                                     const LineChartOptions& opts);

struct HeatmapOptions {
  std::string title;
  std::string row_label;
  std::string col_label;
  int cell = 64;
};

/// values[i][j] is drawn in row i, column j; NaN cells are left grey.
[[nodiscard]] std::string heatmap(const std::vector<std::vector<double>>& values,
                                  const std::vector<double>& row_headers,
                                  const std::vector<double>& col_headers,
                                  const HeatmapOptions& opts);

}  // namespace extrude::svg
