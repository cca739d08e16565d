#pragma once

// Cascaded nozzle (actuation) / printed-strand (printing) flow model, the
// signals that drive it, and parametric plant uncertainty.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace extrude {

/// Scalar system coefficients of the two cascaded first-order subsystems:
///   dx1/dt = a1*x1 + b1*u1 + eta1
///   dx2/dt = a2*x2 + a21*x1 + b2*u2 + eta2
struct PlantParams {
  double a1 = -1.0;   // actuation pole [1/s]
  double b1 = 1.0;    // inlet mass flow rate -> nozzle velocity rate
  double a2 = -1.0;   // printing pole [1/s]
  double a21 = 0.0;   // nozzle velocity -> strand velocity rate coupling [1/s]
  double b2 = 1.0;    // plate velocity -> strand velocity rate

  /// Empty when a1 < 0, a2 < 0, b1 > 0, b2 > 0 and everything is finite;
  /// otherwise a description of the first broken invariant.
  [[nodiscard]] std::optional<std::string> invariant_error() const;
  [[nodiscard]] bool valid() const { return !invariant_error().has_value(); }
  /// Throws std::invalid_argument when invalid.
  void validate() const;

  friend bool operator==(const PlantParams&, const PlantParams&) = default;
};

/// A-priori bounds on disturbances and references (all nonnegative).
struct BoundsSpec {
  double eta1_bar = 0.0;
  double eta2_bar = 0.0;
  double x1r_bar = 0.0;
  double x1rd_bar = 0.0;
  double x2r_bar = 0.0;
  double x2rd_bar = 0.0;

  void validate() const;
};

struct SignalSample {
  double value = 0.0;
  double derivative = 0.0;
};

/// Optional per-signal (magnitude, derivative) bounds declared alongside a reference.
struct DeclaredBounds {
  double magnitude = 0.0;
  double derivative = 0.0;
};

class ReferenceSignal {
 public:
  struct Constant {
    double value = 0.0;
  };
  /// start + slope*t until hold_time, then held.
  struct RampToHold {
    double start = 0.0;
    double slope = 0.0;
    double hold_time = 0.0;
  };
  /// Linear interpolation between (t, value) knots, held outside the knot range.
  struct PiecewiseLinear {
    std::vector<std::pair<double, double>> knots;
  };
  /// offset + amplitude*sin(omega*t + phase)
  struct Sinusoid {
    double amplitude = 0.0;
    double omega = 0.0;
    double offset = 0.0;
    double phase = 0.0;
  };
  using Shape = std::variant<Constant, RampToHold, PiecewiseLinear, Sinusoid>;

  ReferenceSignal() = default;
  explicit ReferenceSignal(Shape shape, std::optional<DeclaredBounds> declared = std::nullopt);

  static ReferenceSignal constant(double value);
  static ReferenceSignal ramp_to_hold(double start, double slope, double hold_time);
  static ReferenceSignal piecewise_linear(std::vector<std::pair<double, double>> knots);
  static ReferenceSignal sinusoid(double amplitude, double omega, double offset, double phase = 0.0);

  /// Value and right-hand derivative at t >= 0.
  [[nodiscard]] SignalSample eval(double t) const;
  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] const std::optional<DeclaredBounds>& declared_bounds() const { return declared_; }
  [[nodiscard]] std::string kind_name() const;

 private:
  Shape shape_{Constant{}};
  std::optional<DeclaredBounds> declared_;
};

class DisturbanceProfile {
 public:
  struct Zero {};
  /// amplitude * 4(t - t_start)(t_end - t)/(t_end - t_start)^2 inside the window.
  struct QuadraticPulse {
    double amplitude = 0.0;
    double t_start = 0.0;
    double t_end = 1.0;
  };
  struct Constant {
    double value = 0.0;
  };
  /// Linear interpolation between samples, zero outside [times.front(), times.back()].
  struct CustomSamples {
    std::vector<double> times;
    std::vector<double> values;
  };
  using Shape = std::variant<Zero, QuadraticPulse, Constant, CustomSamples>;

  DisturbanceProfile() = default;
  /// Throws std::invalid_argument on malformed parameters (t_start >= t_end, unsorted samples).
  explicit DisturbanceProfile(Shape shape);

  static DisturbanceProfile zero();
  static DisturbanceProfile quadratic_pulse(double amplitude, double t_start, double t_end);
  static DisturbanceProfile constant(double value);
  static DisturbanceProfile custom_samples(std::vector<double> times, std::vector<double> values);

  [[nodiscard]] double eval(double t) const;
  /// First time the profile can be nonzero; empty for the zero profile.
  [[nodiscard]] std::optional<double> onset() const;
  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::string kind_name() const;

 private:
  Shape shape_{Zero{}};
};

[[nodiscard]] SignalSample eval_reference(const ReferenceSignal& ref, double t);
[[nodiscard]] double eval_disturbance(const DisturbanceProfile& d, double t);

struct PlantRates {
  double dx1 = 0.0;
  double dx2 = 0.0;
};

[[nodiscard]] constexpr PlantRates plant_derivatives(const PlantParams& p, double x1, double x2,
                                                     double u1, double u2, double eta1,
                                                     double eta2) {
  return {p.a1 * x1 + p.b1 * u1 + eta1, p.a2 * x2 + p.a21 * x1 + p.b2 * u2 + eta2};
}

// ---------------------------------------------------------------------------
// Scenario signal validation

/// One contiguous run of grid points where a signal exceeds its bound.
struct Violation {
  std::string signal;  // eta1, eta2, x1r, x1r_dot, x2r, x2r_dot, or "config"
  double t_first = 0.0;
  double t_last = 0.0;
  std::size_t count = 0;
  double worst = 0.0;  // largest |value| seen in the run
  double bound = 0.0;
  std::string message;
};

struct SignalSet {
  const ReferenceSignal& x1r;
  const ReferenceSignal& x2r;
  const DisturbanceProfile& eta1;
  const DisturbanceProfile& eta2;
};

/// Samples every signal on a uniform grid of spacing grid_step over
/// [0, horizon] and reports each run of pointwise bound violations, plus
/// plant or bounds invariant breaches. Never throws on violations.
[[nodiscard]] std::vector<Violation> validate_scenario(const PlantParams& p,
                                                       const BoundsSpec& bounds,
                                                       const SignalSet& signals, double horizon,
                                                       double grid_step);

// ---------------------------------------------------------------------------
// Parametric uncertainty

struct ParamDistribution {
  enum class Kind { none, uniform, gaussian };
  Kind kind = Kind::none;
  /// uniform: half-width as a fraction of the nominal; gaussian: relative std.
  double spread = 0.0;

  friend bool operator==(const ParamDistribution&, const ParamDistribution&) = default;
};

struct UncertaintySampler {
  ParamDistribution a1, b1, a2, a21, b2;
  std::uint64_t seed = 0;

  static UncertaintySampler all(ParamDistribution d, std::uint64_t seed);
};

class ResampleCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kResampleCap = 100;

/// Draws n perturbed copies of `nominal`. Each draw is rejected and redrawn
/// (up to kResampleCap attempts) until it satisfies the plant invariants.
/// Same seed, same sequence.
[[nodiscard]] std::vector<PlantParams> sample_plant(const UncertaintySampler& sampler,
                                                    const PlantParams& nominal, std::size_t n);

}  // namespace extrude
