#include "extrudesim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace extrude::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

std::string tick(double v) { return fmt::format("{:.3g}", v); }

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace

std::string line_chart(const std::vector<Series>& series, const LineChartOptions& opts) {
  const double left = 70, right = 160, top = 40, bottom = 50;
  const double pw = opts.width - left - right;
  const double ph = opts.height - top - bottom;

  Range xr, yr;
  for (const auto& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.finish();
  yr.finish();
  const double pad = 0.05 * (yr.hi - yr.lo);
  yr.lo -= pad;
  yr.hi += pad;

  auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << fmt::format(
      R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">)"
      "\n",
      opts.width, opts.height);
  o << fmt::format(R"(<rect width="{}" height="{}" fill="white"/>)" "\n", opts.width, opts.height);
  o << fmt::format(R"(<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>)" "\n",
                   left + pw / 2, escape(opts.title));

  for (int i = 0; i <= 5; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 5.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 5.0;
    o << fmt::format(
        R"(<line x1="{0:.1f}" y1="{1:.1f}" x2="{0:.1f}" y2="{2:.1f}" stroke="#e0e0e0"/>)" "\n",
        px(fx), top, top + ph);
    o << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" text-anchor="middle">{}</text>)" "\n", px(fx),
                     top + ph + 16, tick(fx));
    o << fmt::format(
        R"(<line x1="{1:.1f}" y1="{0:.1f}" x2="{2:.1f}" y2="{0:.1f}" stroke="#e0e0e0"/>)" "\n",
        py(fy), left, left + pw);
    o << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" text-anchor="end">{}</text>)" "\n", left - 6,
                     py(fy) + 4, tick(fy));
  }
  o << fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>)" "\n",
                   left, top, pw, ph);
  o << fmt::format(R"(<text x="{:.1f}" y="{}" text-anchor="middle">{}</text>)" "\n", left + pw / 2,
                   opts.height - 10, escape(opts.x_label));
  o << fmt::format(
      R"svg(<text x="16" y="{0:.1f}" text-anchor="middle" transform="rotate(-90 16 {0:.1f})">{1}</text>)svg"
      "\n",
      top + ph / 2, escape(opts.y_label));

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    const std::size_t stride = std::max<std::size_t>(1, n / std::max<std::size_t>(1, opts.max_points));
    std::string pts;
    for (std::size_t i = 0; i < n; i += stride) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
    }
    o << fmt::format(R"(<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>)" "\n",
                     color, pts);
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    o << fmt::format(
        R"(<line x1="{0:.1f}" y1="{1:.1f}" x2="{2:.1f}" y2="{1:.1f}" stroke="{3}" stroke-width="2"/>)"
        "\n",
        left + pw + 12, ly, left + pw + 36, color);
    o << fmt::format(R"(<text x="{:.1f}" y="{:.1f}">{}</text>)" "\n", left + pw + 42, ly + 4,
                     escape(s.label));
  }
  o << "</svg>\n";
  return o.str();
}

std::string heatmap(const std::vector<std::vector<double>>& values,
                    const std::vector<double>& row_headers, const std::vector<double>& col_headers,
                    const HeatmapOptions& opts) {
  const double left = 90, top = 50, cell = opts.cell;
  const std::size_t rows = values.size();
  const std::size_t cols = rows ? values.front().size() : 0;
  const double width = left + cell * static_cast<double>(cols) + 30;
  const double height = top + cell * static_cast<double>(rows) + 60;

  Range vr;
  for (const auto& row : values)
    for (double v : row) vr.add(v);
  vr.finish();

  auto color = [&](double v) {
    if (!std::isfinite(v)) return std::string("#bbbbbb");
    const double f = std::clamp((v - vr.lo) / (vr.hi - vr.lo), 0.0, 1.0);
    // White to dark blue.
    const auto r = static_cast<int>(std::lround(255 - 220 * f));
    const auto g = static_cast<int>(std::lround(255 - 180 * f));
    const auto b = static_cast<int>(std::lround(255 - 100 * f));
    return fmt::format("#{:02x}{:02x}{:02x}", r, g, b);
  };

  std::ostringstream o;
  o << fmt::format(
      R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">)"
      "\n",
      width, height);
  o << fmt::format(R"(<rect width="{}" height="{}" fill="white"/>)" "\n", width, height);
  o << fmt::format(R"(<text x="{:.1f}" y="22" text-anchor="middle" font-size="14">{}</text>)" "\n",
                   width / 2, escape(opts.title));
  for (std::size_t i = 0; i < rows; ++i) {
    const double y = top + cell * static_cast<double>(i);
    if (i < row_headers.size())
      o << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" text-anchor="end">{}</text>)" "\n", left - 6,
                       y + cell / 2 + 4, tick(row_headers[i]));
    for (std::size_t j = 0; j < cols && j < values[i].size(); ++j) {
      const double x = left + cell * static_cast<double>(j);
      const double v = values[i][j];
      o << fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="{}" height="{}" fill="{}" stroke="white"/>)"
                       "\n",
                       x, y, cell, cell, color(v));
      const bool dark = std::isfinite(v) && (v - vr.lo) / (vr.hi - vr.lo) > 0.6;
      o << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" text-anchor="middle" fill="{}">{}</text>)" "\n",
                       x + cell / 2, y + cell / 2 + 4, dark ? "white" : "black",
                       std::isfinite(v) ? tick(v) : std::string("n/a"));
    }
  }
  const double bottom = top + cell * static_cast<double>(rows);
  for (std::size_t j = 0; j < cols && j < col_headers.size(); ++j)
    o << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" text-anchor="middle">{}</text>)" "\n",
                     left + cell * (static_cast<double>(j) + 0.5), bottom + 16, tick(col_headers[j]));
  o << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" text-anchor="middle">{}</text>)" "\n",
                   left + cell * static_cast<double>(cols) / 2, bottom + 40, escape(opts.col_label));
  o << fmt::format(
      R"svg(<text x="14" y="{0:.1f}" text-anchor="middle" transform="rotate(-90 14 {0:.1f})">{1}</text>)svg"
      "\n",
      top + cell * static_cast<double>(rows) / 2, escape(opts.row_label));
  o << "</svg>\n";
  return o.str();
}

}  // namespace extrude::svg
