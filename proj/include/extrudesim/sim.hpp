#pragma once

// Fixed-step closed-loop simulation: RK4 on the plant with the controls held
// over each step, trajectory recording and run metrics.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "extrudesim/control.hpp"
#include "extrudesim/plant.hpp"
#include "extrudesim/scenario.hpp"

namespace extrude {

inline constexpr double kDivergenceLimit = 1e12;

struct SimState {
  double t = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
  SlidingState sliding;
};

/// Thrown when a state leaves [-1e12, 1e12] or becomes non-finite.
/// Carries the last state that was still valid.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, SimState last_valid)
      : std::runtime_error(what), last_valid_(last_valid) {}
  [[nodiscard]] const SimState& last_valid() const { return last_valid_; }

 private:
  SimState last_valid_;
};

/// The scenario with the strand controller designed and the plant that is
/// actually integrated resolved.
struct ClosedLoop {
  PlantParams design;
  PlantParams actual;
  NozzleControllerConfig nozzle;
  StrandControllerConfig strand;
  ReferenceSignal x1r;
  ReferenceSignal x2r;
  DisturbanceProfile eta1;
  DisturbanceProfile eta2;
};

/// Uses `actual` instead of scenario.simulated_plant() when given.
[[nodiscard]] ClosedLoop make_closed_loop(const Scenario& scenario,
                                          std::optional<PlantParams> actual = std::nullopt);

/// Everything the controller computes from one state, plus the signals it saw.
struct Controls {
  double x1r = 0.0;
  double x2r = 0.0;
  double u1 = 0.0;
  StrandControl strand;
  double eta1 = 0.0;
  double eta2 = 0.0;
};

[[nodiscard]] Controls compute_controls(const ClosedLoop& loop, const SimState& state);

[[nodiscard]] SimState initial_state(const ClosedLoop& loop, double x1, double x2);

/// Advances one step of length dt. Throws DivergenceError.
[[nodiscard]] SimState step(const SimState& state, const ClosedLoop& loop, double dt);

struct TrajectorySample {
  double t, x1, x1r, x2, x2r, u1, u2, u_cancel, u_sm, u_opt, eta1, eta2, s, W1, W2;
};

using Trajectory = std::vector<TrajectorySample>;

struct Metrics {
  double max_err1_pct = 0.0;
  double max_err2_pct = 0.0;
  double max_err1_post_pct = 0.0;
  double max_err2_post_pct = 0.0;
  double ss_err1_pct = 0.0;
  double ss_err2_pct = 0.0;
  double control_effort_u1 = 0.0;  // integral of u1^2
  double control_effort_u2 = 0.0;  // integral of u2^2
  double cost_J = 0.0;             // integral of q*e2^2 + r*u2^2
  std::optional<double> reach_time_1;
  std::optional<double> reach_time_s;
  double fraction_in_band = 0.0;
  double post_window_start = 0.0;
  double ref_scale_1 = 0.0;
  double ref_scale_2 = 0.0;
  // True when the reference scale is ~0 and the "pct" fields hold absolute errors.
  bool absolute_errors_1 = false;
  bool absolute_errors_2 = false;
};

struct MetricOptions {
  double q = 1.0;
  double r = 1.0;
  double post_window_start = 0.0;
  /// |x1r - x1| band used for reach_time_1; sliding_band_delta when <= 0.
  double error1_band = 0.0;
};

/// Throws std::invalid_argument on an empty trajectory.
[[nodiscard]] Metrics compute_metrics(const Trajectory& traj, const SimConfig& cfg,
                                      const MetricOptions& opts);

struct BandCheck {
  std::optional<double> reach_time;
  double fraction_in_band = 0.0;
};

/// First time |v| <= delta after which |v| never exceeds 2*delta; then the
/// fraction of samples from there on with |v| <= delta.
[[nodiscard]] BandCheck band_check(const std::vector<double>& t, const std::vector<double>& v,
                                   double delta);
[[nodiscard]] BandCheck sliding_band_check(const Trajectory& traj, double delta);

struct Diagnostics {
  PlantParams design_plant;
  PlantParams simulated_plant;
  bool sampled_plant = false;
  double riccati_p = 0.0;
  double k21 = 0.0;
  double opt_gain = 0.0;
  double sliding_pole = 0.0;
  GainCertificate k1_certificate;
  GainCertificate k22_certificate;
  std::vector<Violation> violations;
  bool forced = false;
  std::size_t steps = 0;
};

struct SimResult {
  Trajectory trajectory;  // every step; decimate on export
  Metrics metrics;
  Diagnostics diagnostics;
};

/// Validation failed and the caller did not force the run.
class ValidationFailed : public ScenarioError {
 public:
  explicit ValidationFailed(std::vector<Violation> violations);
  [[nodiscard]] const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

struct SimOptions {
  bool force = false;  // run despite bound violations (they go to diagnostics)
};

/// Throws ValidationFailed, DivergenceError or ScenarioError.
[[nodiscard]] SimResult simulate(const Scenario& scenario, const SimOptions& opts = {});

/// Every record_every-th sample, always keeping the last one.
[[nodiscard]] Trajectory decimate(const Trajectory& traj, int record_every);

}  // namespace extrude
