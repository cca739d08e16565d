#pragma once

// Nozzle sliding-mode law, strand cancellation + sliding-mode + LQ law,
// scalar Riccati solve and the gain conditions that certify reaching.

#include <optional>
#include <stdexcept>

#include "extrudesim/plant.hpp"

namespace extrude {

struct Switching {
  enum class Kind { signum, boundary_layer };
  Kind kind = Kind::signum;
  double epsilon = 0.0;  // boundary-layer half width, > 0 when used

  static Switching signum() { return {}; }
  static Switching boundary_layer(double epsilon);
  void validate() const;
};

/// signum: {-1, 0, +1} with sgn(0) = 0. boundary layer: clamp(e/epsilon, -1, 1).
[[nodiscard]] double switching_function(double e, const Switching& mode);

struct NozzleControllerConfig {
  double k1 = 0.0;
  Switching switching;
  /// Optional symmetric saturation of u1; off by default.
  std::optional<double> u1_limit;

  void validate() const;
};

/// u1 = k1 * switching_function(x1r - x1), then the optional saturation.
[[nodiscard]] double nozzle_control(const NozzleControllerConfig& cfg, double x1r, double x1);

enum class K1ConditionForm {
  product,        // (x1rd + |a1| * x1r + eta1) / b1
  paper_literal,  // (x1rd + |a1| + x1r + eta1) / b1, as printed
};

/// Smallest nozzle gain for which the reaching condition holds.
[[nodiscard]] double min_gain_k1(const PlantParams& p, const BoundsSpec& b,
                                 K1ConditionForm form = K1ConditionForm::product);

/// Smallest strand sliding gain: (x2rd + |a2| * x2r + eta2) / b2.
[[nodiscard]] double min_gain_k22(const PlantParams& p, const BoundsSpec& b);

class InvalidWeights : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Nonnegative root of 2*a2*P + q = P^2 * b2^2 / r. Throws InvalidWeights
/// for r <= 0 or q < 0.
[[nodiscard]] double solve_riccati(const PlantParams& p, double q, double r);

/// a2 - b2 * gain, the pole of the reduced sliding dynamics for a static
/// error-feedback gain (gain = b2*P/r at the LQ optimum).
[[nodiscard]] inline double closed_loop_pole(const PlantParams& p, double gain) {
  return p.a2 - p.b2 * gain;
}

/// a21 / b2, removes the nozzle coupling from the strand dynamics.
[[nodiscard]] double cancellation_gain(const PlantParams& p);

/// What the user specifies for the strand controller; P and (by default)
/// k21 are derived from the design plant.
struct StrandDesign {
  double k22 = 0.0;
  double q = 1.0;
  double r = 1.0;
  Switching switching;
  bool enable_sm = true;
  bool enable_opt = true;
  std::optional<double> k21;   // empty: cancellation_gain(plant)
  double opt_gain_scale = 1.0; // multiplies the LQ gain; 1 is the optimum
};

struct StrandControllerConfig {
  double k21 = 0.0;
  double k22 = 0.0;
  double q = 1.0;
  double r = 1.0;
  double p = 0.0;  // Riccati solution
  Switching switching;
  bool enable_sm = true;
  bool enable_opt = true;
  double opt_gain_scale = 1.0;

  /// Static error-feedback gain of u_OPT: opt_gain_scale * b2 * p / r.
  [[nodiscard]] double opt_gain(const PlantParams& plant) const {
    return opt_gain_scale * plant.b2 * p / r;
  }
};

/// Solves the Riccati equation and fills in k21. Throws InvalidWeights or
/// std::invalid_argument for an invalid design.
[[nodiscard]] StrandControllerConfig design_strand_controller(const PlantParams& plant,
                                                              const StrandDesign& design);

/// Integral sliding surface s = e2 - z, z = integral of (a2 - b2*gain) * e2.
/// `e2` is the error at the most recent update (the held value for the next
/// trapezoid step).
struct SlidingState {
  double z = 0.0;
  double s = 0.0;
  double e2 = 0.0;

  static SlidingState start(double e2_initial) { return {0.0, e2_initial, e2_initial}; }
};

/// Advances z by one trapezoid step between the held and the current error.
[[nodiscard]] SlidingState update_sliding_surface(const SlidingState& state,
                                                  const PlantParams& plant,
                                                  const StrandControllerConfig& cfg,
                                                  double e2_now, double dt);

struct StrandControl {
  double u2 = 0.0;
  double u_cancel = 0.0;
  double u_sm = 0.0;
  double u_opt = 0.0;
};

/// u2 = -k21*x1 + [sm] k22*switching(s) + [opt] gain*(x2r - x2).
[[nodiscard]] StrandControl strand_control(const StrandControllerConfig& cfg,
                                           const PlantParams& plant, double x1, double x2r,
                                           double x2, const SlidingState& sliding);

/// Continuous control that holds ds/dt = 0: (x2r_dot - a2*x2r - eta2) / b2.
[[nodiscard]] double equivalent_control(const PlantParams& p, double x2r_dot, double x2r,
                                        double eta2);

struct GainCertificate {
  double min_gain = 0.0;
  double configured_gain = 0.0;
  double margin = 0.0;  // configured - min
  double alpha = 0.0;   // margin scaled by the input gain (b1 or b2)
  bool satisfied = false;
};

[[nodiscard]] GainCertificate certify_gain(double min_gain, double configured, double input_gain);

}  // namespace extrude
