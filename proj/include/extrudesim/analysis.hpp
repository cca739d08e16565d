#pragma once

// Small statistics used by the trend assertions.

#include <optional>
#include <vector>

#include "extrudesim/sim.hpp"

namespace extrude {

/// Spearman rank correlation with average ranks for ties. Empty when either
/// series is constant or shorter than 2.
[[nodiscard]] std::optional<double> spearman_rho(const std::vector<double>& x,
                                                 const std::vector<double>& y);

/// True when v[i+1] <= v[i] + tol*max(1, |v[i]|) everywhere.
[[nodiscard]] bool nonincreasing(const std::vector<double>& v, double tol = 1e-9);

/// output[i] = mean of v[i .. i+width-1]; size v.size()-width+1 (empty if shorter).
[[nodiscard]] std::vector<double> moving_average(const std::vector<double>& v, std::size_t width);

struct SlidingDynamicsCheck {
  std::size_t points = 0;        // finite-difference points evaluated
  double worst_rel_error = 0.0;  // max |fd - pole*e| / |pole*e|
  double pole = 0.0;
};

struct SlidingDynamicsOptions {
  double delta = 1e-3;      // |s| band that marks the reach time
  std::size_t stride = 10;  // resampling stride on the full-rate trajectory
  std::size_t window = 10;  // moving-average width (in resampled points)
  double min_error = 0.05;  // skip points where the smoothed error is below this
};

/// Compares the smoothed central difference of e2 = x2r - x2 against
/// pole*e2 after the sliding surface has been reached. Empty when the
/// surface is never reached or no point qualifies.
[[nodiscard]] std::optional<SlidingDynamicsCheck> check_sliding_dynamics(
    const Trajectory& traj, double pole, const SlidingDynamicsOptions& opts = {});

}  // namespace extrude
