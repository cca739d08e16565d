#include "extrudesim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace extrude {

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

std::optional<double> spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman_rho: size mismatch");
  if (x.size() < 2) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

bool nonincreasing(const std::vector<double>& v, double tol) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1] + tol * std::max(1.0, std::abs(v[i - 1]))) return false;
  }
  return true;
}

std::vector<double> moving_average(const std::vector<double>& v, std::size_t width) {
  if (width == 0) throw std::invalid_argument("moving_average: width must be >= 1");
  if (v.size() < width) return {};
  std::vector<double> out(v.size() - width + 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < width; ++k) acc += v[i + k];
    out[i] = acc / static_cast<double>(width);
  }
  return out;
}

std::optional<SlidingDynamicsCheck> check_sliding_dynamics(const Trajectory& traj, double pole,
                                                           const SlidingDynamicsOptions& opts) {
  if (opts.stride == 0 || opts.window == 0)
    throw std::invalid_argument("check_sliding_dynamics: stride and window must be >= 1");
  const BandCheck reached = sliding_band_check(traj, opts.delta);
  if (!reached.reach_time) return std::nullopt;

  std::vector<double> t, e;
  for (std::size_t i = 0; i < traj.size(); i += opts.stride) {
    t.push_back(traj[i].t);
    e.push_back(traj[i].x2r - traj[i].x2);
  }
  const auto ma = moving_average(e, opts.window);
  const auto mt = moving_average(t, opts.window);
  if (ma.size() < 3) return std::nullopt;

  SlidingDynamicsCheck out;
  out.pole = pole;
  for (std::size_t i = 1; i + 1 < ma.size(); ++i) {
    // Every raw sample feeding the central difference must lie after the reach time.
    if (t[i - 1] < *reached.reach_time) continue;
    if (std::abs(ma[i]) < opts.min_error) continue;
    const double fd = (ma[i + 1] - ma[i - 1]) / (mt[i + 1] - mt[i - 1]);
    const double model = pole * ma[i];
    out.worst_rel_error = std::max(out.worst_rel_error, std::abs(fd - model) / std::abs(model));
    ++out.points;
  }
  if (out.points == 0) return std::nullopt;
  return out;
}

}  // namespace extrude
