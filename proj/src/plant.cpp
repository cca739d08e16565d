#include "extrudesim/plant.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace extrude {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool all_finite(std::initializer_list<double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::optional<std::string> PlantParams::invariant_error() const {
  if (!all_finite({a1, b1, a2, a21, b2})) return "plant coefficients must be finite";
  if (!(a1 < 0.0)) return "a1 must be negative (stable actuation system)";
  if (!(a2 < 0.0)) return "a2 must be negative (stable printing system)";
  if (!(b1 > 0.0)) return "b1 must be positive";
  if (!(b2 > 0.0)) return "b2 must be positive";
  return std::nullopt;
}

void PlantParams::validate() const {
  if (auto err = invariant_error()) throw std::invalid_argument(*err);
}

void BoundsSpec::validate() const {
  for (double v : {eta1_bar, eta2_bar, x1r_bar, x1rd_bar, x2r_bar, x2rd_bar}) {
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("bounds must be finite and nonnegative");
  }
}

// ---------------------------------------------------------------------------
// ReferenceSignal

ReferenceSignal::ReferenceSignal(Shape shape, std::optional<DeclaredBounds> declared)
    : shape_(std::move(shape)), declared_(declared) {
  std::visit(overloaded{
                 [](const Constant&) {},
                 [](const RampToHold& r) {
                   if (!(r.hold_time >= 0.0))
                     throw std::invalid_argument("ramp-to-hold: hold_time must be >= 0");
                 },
                 [](const PiecewiseLinear& p) {
                   if (p.knots.empty())
                     throw std::invalid_argument("piecewise-linear: at least one knot required");
                   for (std::size_t i = 1; i < p.knots.size(); ++i) {
                     if (!(p.knots[i].first > p.knots[i - 1].first))
                       throw std::invalid_argument(
                           "piecewise-linear: knot times must be strictly increasing");
                   }
                 },
                 [](const Sinusoid&) {},
             },
             shape_);
}

ReferenceSignal ReferenceSignal::constant(double value) { return ReferenceSignal(Constant{value}); }

ReferenceSignal ReferenceSignal::ramp_to_hold(double start, double slope, double hold_time) {
  return ReferenceSignal(RampToHold{start, slope, hold_time});
}

ReferenceSignal ReferenceSignal::piecewise_linear(std::vector<std::pair<double, double>> knots) {
  return ReferenceSignal(PiecewiseLinear{std::move(knots)});
}

ReferenceSignal ReferenceSignal::sinusoid(double amplitude, double omega, double offset,
                                          double phase) {
  return ReferenceSignal(Sinusoid{amplitude, omega, offset, phase});
}

SignalSample ReferenceSignal::eval(double t) const {
  return std::visit(
      overloaded{
          [](const Constant& c) { return SignalSample{c.value, 0.0}; },
          [t](const RampToHold& r) {
            if (t < r.hold_time) return SignalSample{r.start + r.slope * t, r.slope};
            return SignalSample{r.start + r.slope * r.hold_time, 0.0};
          },
          [t](const PiecewiseLinear& p) {
            const auto& k = p.knots;
            if (t < k.front().first) return SignalSample{k.front().second, 0.0};
            // First knot strictly after t: at a breakpoint this selects the
            // segment to the right.
            auto hi = std::upper_bound(k.begin(), k.end(), t,
                                       [](double tv, const auto& knot) { return tv < knot.first; });
            if (hi == k.end()) return SignalSample{k.back().second, 0.0};
            auto lo = std::prev(hi);
            const double slope = (hi->second - lo->second) / (hi->first - lo->first);
            return SignalSample{lo->second + slope * (t - lo->first), slope};
          },
          [t](const Sinusoid& s) {
            const double arg = s.omega * t + s.phase;
            return SignalSample{s.offset + s.amplitude * std::sin(arg),
                                s.amplitude * s.omega * std::cos(arg)};
          },
      },
      shape_);
}

std::string ReferenceSignal::kind_name() const {
  return std::visit(overloaded{
                        [](const Constant&) { return std::string("constant"); },
                        [](const RampToHold&) { return std::string("ramp-to-hold"); },
                        [](const PiecewiseLinear&) { return std::string("piecewise-linear"); },
                        [](const Sinusoid&) { return std::string("sinusoid"); },
                    },
                    shape_);
}

// ---------------------------------------------------------------------------
// DisturbanceProfile

DisturbanceProfile::DisturbanceProfile(Shape shape) : shape_(std::move(shape)) {
  std::visit(overloaded{
                 [](const Zero&) {},
                 [](const QuadraticPulse& q) {
                   if (!(q.t_start < q.t_end))
                     throw std::invalid_argument("quadratic-pulse: t_start must be < t_end");
                   if (q.t_start < 0.0)
                     throw std::invalid_argument("quadratic-pulse: t_start must be >= 0");
                 },
                 [](const Constant&) {},
                 [](const CustomSamples& c) {
                   if (c.times.empty() || c.times.size() != c.values.size())
                     throw std::invalid_argument(
                         "custom-samples: times and values must be non-empty and equal length");
                   for (std::size_t i = 1; i < c.times.size(); ++i) {
                     if (!(c.times[i] > c.times[i - 1]))
                       throw std::invalid_argument(
                           "custom-samples: times must be strictly increasing");
                   }
                 },
             },
             shape_);
}

DisturbanceProfile DisturbanceProfile::zero() { return DisturbanceProfile(Zero{}); }

DisturbanceProfile DisturbanceProfile::quadratic_pulse(double amplitude, double t_start,
                                                       double t_end) {
  return DisturbanceProfile(QuadraticPulse{amplitude, t_start, t_end});
}

DisturbanceProfile DisturbanceProfile::constant(double value) {
  return DisturbanceProfile(Constant{value});
}

DisturbanceProfile DisturbanceProfile::custom_samples(std::vector<double> times,
                                                      std::vector<double> values) {
  return DisturbanceProfile(CustomSamples{std::move(times), std::move(values)});
}

double DisturbanceProfile::eval(double t) const {
  return std::visit(
      overloaded{
          [](const Zero&) { return 0.0; },
          [t](const QuadraticPulse& q) {
            if (t <= q.t_start || t >= q.t_end) return 0.0;
            const double w = q.t_end - q.t_start;
            return q.amplitude * 4.0 * (t - q.t_start) * (q.t_end - t) / (w * w);
          },
          [](const Constant& c) { return c.value; },
          [t](const CustomSamples& c) {
            if (t < c.times.front() || t > c.times.back()) return 0.0;
            auto hi = std::upper_bound(c.times.begin(), c.times.end(), t);
            if (hi == c.times.end()) return c.values.back();
            const auto j = static_cast<std::size_t>(hi - c.times.begin());
            const double frac = (t - c.times[j - 1]) / (c.times[j] - c.times[j - 1]);
            return c.values[j - 1] + frac * (c.values[j] - c.values[j - 1]);
          },
      },
      shape_);
}

std::optional<double> DisturbanceProfile::onset() const {
  return std::visit(overloaded{
                        [](const Zero&) -> std::optional<double> { return std::nullopt; },
                        [](const QuadraticPulse& q) -> std::optional<double> { return q.t_start; },
                        [](const Constant& c) -> std::optional<double> {
                          if (c.value == 0.0) return std::nullopt;
                          return 0.0;
                        },
                        [](const CustomSamples& c) -> std::optional<double> {
                          for (std::size_t i = 0; i < c.values.size(); ++i) {
                            if (c.values[i] != 0.0) return i == 0 ? c.times[0] : c.times[i - 1];
                          }
                          return std::nullopt;
                        },
                    },
                    shape_);
}

std::string DisturbanceProfile::kind_name() const {
  return std::visit(overloaded{
                        [](const Zero&) { return std::string("zero"); },
                        [](const QuadraticPulse&) { return std::string("quadratic-pulse"); },
                        [](const Constant&) { return std::string("constant"); },
                        [](const CustomSamples&) { return std::string("custom-samples"); },
                    },
                    shape_);
}

SignalSample eval_reference(const ReferenceSignal& ref, double t) { return ref.eval(t); }

double eval_disturbance(const DisturbanceProfile& d, double t) { return d.eval(t); }

// ---------------------------------------------------------------------------
// Validation

namespace {

// Collapses pointwise exceedances of one signal into contiguous runs.
class RunCollector {
 public:
  RunCollector(std::string signal, double bound) : signal_(std::move(signal)), bound_(bound) {}

  void observe(std::size_t k, double t, double value) {
    const double mag = std::abs(value);
    const bool bad = !std::isfinite(value) || mag > bound_ * (1.0 + 1e-12) + 1e-12;
    if (!bad) {
      open_ = false;
      return;
    }
    if (!open_ || k != last_k_ + 1) {
      runs_.push_back({signal_, t, t, 0, 0.0, bound_, {}});
      open_ = true;
    }
    auto& run = runs_.back();
    run.t_last = t;
    ++run.count;
    run.worst = std::max(run.worst, mag);
    last_k_ = k;
  }

  void flush_into(std::vector<Violation>& out) {
    for (auto& r : runs_) {
      std::ostringstream msg;
      msg << r.signal << " exceeds bound " << r.bound << " on [" << r.t_first << ", " << r.t_last
          << "] s (worst |value| " << r.worst << ", " << r.count << " grid points)";
      r.message = msg.str();
      out.push_back(std::move(r));
    }
    runs_.clear();
  }

 private:
  std::string signal_;
  double bound_;
  std::vector<Violation> runs_;
  bool open_ = false;
  std::size_t last_k_ = 0;
};

Violation config_violation(std::string message) {
  Violation v;
  v.signal = "config";
  v.message = std::move(message);
  return v;
}

}  // namespace

std::vector<Violation> validate_scenario(const PlantParams& p, const BoundsSpec& bounds,
                                         const SignalSet& signals, double horizon,
                                         double grid_step) {
  std::vector<Violation> out;
  if (auto err = p.invariant_error()) out.push_back(config_violation("plant: " + *err));
  try {
    bounds.validate();
  } catch (const std::invalid_argument& e) {
    out.push_back(config_violation(std::string("bounds: ") + e.what()));
  }
  if (!(horizon > 0.0) || !(grid_step > 0.0) || !std::isfinite(horizon)) {
    out.push_back(config_violation("horizon and validation grid step must be positive"));
    return out;
  }

  std::vector<RunCollector> collectors;
  collectors.emplace_back("eta1", bounds.eta1_bar);
  collectors.emplace_back("eta2", bounds.eta2_bar);
  collectors.emplace_back("x1r", bounds.x1r_bar);
  collectors.emplace_back("x1r_dot", bounds.x1rd_bar);
  collectors.emplace_back("x2r", bounds.x2r_bar);
  collectors.emplace_back("x2r_dot", bounds.x2rd_bar);
  const auto& d1 = signals.x1r.declared_bounds();
  const auto& d2 = signals.x2r.declared_bounds();
  if (d1) {
    collectors.emplace_back("x1r(declared)", d1->magnitude);
    collectors.emplace_back("x1r_dot(declared)", d1->derivative);
  }
  if (d2) {
    collectors.emplace_back("x2r(declared)", d2->magnitude);
    collectors.emplace_back("x2r_dot(declared)", d2->derivative);
  }

  const auto n = static_cast<std::size_t>(std::ceil(horizon / grid_step - 1e-9));
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = std::min(static_cast<double>(k) * grid_step, horizon);
    const auto r1 = signals.x1r.eval(t);
    const auto r2 = signals.x2r.eval(t);
    std::size_t c = 0;
    collectors[c++].observe(k, t, signals.eta1.eval(t));
    collectors[c++].observe(k, t, signals.eta2.eval(t));
    collectors[c++].observe(k, t, r1.value);
    collectors[c++].observe(k, t, r1.derivative);
    collectors[c++].observe(k, t, r2.value);
    collectors[c++].observe(k, t, r2.derivative);
    if (d1) {
      collectors[c++].observe(k, t, r1.value);
      collectors[c++].observe(k, t, r1.derivative);
    }
    if (d2) {
      collectors[c++].observe(k, t, r2.value);
      collectors[c++].observe(k, t, r2.derivative);
    }
  }
  for (auto& col : collectors) col.flush_into(out);
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

UncertaintySampler UncertaintySampler::all(ParamDistribution d, std::uint64_t seed) {
  return UncertaintySampler{d, d, d, d, d, seed};
}

namespace {

double perturb(double nominal, const ParamDistribution& d, std::mt19937_64& rng) {
  switch (d.kind) {
    case ParamDistribution::Kind::none:
      return nominal;
    case ParamDistribution::Kind::uniform: {
      std::uniform_real_distribution<double> u(-d.spread, d.spread);
      return nominal * (1.0 + u(rng));
    }
    case ParamDistribution::Kind::gaussian: {
      std::normal_distribution<double> g(0.0, 1.0);
      return nominal * (1.0 + d.spread * g(rng));
    }
  }
  return nominal;
}

}  // namespace

std::vector<PlantParams> sample_plant(const UncertaintySampler& sampler,
                                      const PlantParams& nominal, std::size_t n) {
  if (n == 0) throw std::invalid_argument("sample_plant: n must be >= 1");
  std::mt19937_64 rng(sampler.seed);
  std::vector<PlantParams> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool accepted = false;
    for (int attempt = 0; attempt < kResampleCap; ++attempt) {
      PlantParams p;
      p.a1 = perturb(nominal.a1, sampler.a1, rng);
      p.b1 = perturb(nominal.b1, sampler.b1, rng);
      p.a2 = perturb(nominal.a2, sampler.a2, rng);
      p.a21 = perturb(nominal.a21, sampler.a21, rng);
      p.b2 = perturb(nominal.b2, sampler.b2, rng);
      if (p.valid()) {
        out.push_back(p);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw ResampleCapExceeded("sample_plant: no valid plant after " +
                                std::to_string(kResampleCap) + " attempts for sample " +
                                std::to_string(i));
    }
  }
  return out;
}

}  // namespace extrude
