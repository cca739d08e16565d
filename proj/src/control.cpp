#include "extrudesim/control.hpp"

#include <algorithm>
#include <cmath>

namespace extrude {

Switching Switching::boundary_layer(double epsilon) {
  Switching s{Kind::boundary_layer, epsilon};
  s.validate();
  return s;
}

void Switching::validate() const {
  if (kind == Kind::boundary_layer && !(epsilon > 0.0 && std::isfinite(epsilon)))
    throw std::invalid_argument("boundary-layer switching needs epsilon > 0");
}

double switching_function(double e, const Switching& mode) {
  if (mode.kind == Switching::Kind::boundary_layer) return std::clamp(e / mode.epsilon, -1.0, 1.0);
  if (e > 0.0) return 1.0;
  if (e < 0.0) return -1.0;
  return 0.0;
}

void NozzleControllerConfig::validate() const {
  if (!(k1 >= 0.0) || !std::isfinite(k1)) throw std::invalid_argument("k1 must be >= 0");
  switching.validate();
  if (u1_limit && !(*u1_limit > 0.0)) throw std::invalid_argument("u1_limit must be > 0");
}

double nozzle_control(const NozzleControllerConfig& cfg, double x1r, double x1) {
  double u1 = cfg.k1 * switching_function(x1r - x1, cfg.switching);
  if (cfg.u1_limit) u1 = std::clamp(u1, -*cfg.u1_limit, *cfg.u1_limit);
  return u1;
}

double min_gain_k1(const PlantParams& p, const BoundsSpec& b, K1ConditionForm form) {
  if (!(p.b1 > 0.0)) throw std::invalid_argument("min_gain_k1: b1 must be > 0");
  const double a = std::abs(p.a1);
  const double reference_term = form == K1ConditionForm::product ? a * b.x1r_bar : a + b.x1r_bar;
  return (b.x1rd_bar + reference_term + b.eta1_bar) / p.b1;
}

double min_gain_k22(const PlantParams& p, const BoundsSpec& b) {
  if (!(p.b2 > 0.0)) throw std::invalid_argument("min_gain_k22: b2 must be > 0");
  return (b.x2rd_bar + std::abs(p.a2) * b.x2r_bar + b.eta2_bar) / p.b2;
}

double solve_riccati(const PlantParams& p, double q, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidWeights("Riccati: r must be > 0");
  if (!(q >= 0.0) || !std::isfinite(q)) throw InvalidWeights("Riccati: q must be >= 0");
  if (!(p.a2 < 0.0)) throw std::invalid_argument("Riccati: a2 must be < 0");
  const double b2sq = p.b2 * p.b2;
  const double root = std::sqrt(p.a2 * p.a2 + b2sq * q / r);
  // a2 + root cancels catastrophically when q is tiny; use the conjugate form
  // r*(root + a2)/b2^2 = q/(root - a2).
  return q / (root - p.a2);
}

double cancellation_gain(const PlantParams& p) {
  if (p.b2 == 0.0) throw std::invalid_argument("cancellation_gain: b2 must be nonzero");
  return p.a21 / p.b2;
}

StrandControllerConfig design_strand_controller(const PlantParams& plant,
                                                const StrandDesign& design) {
  design.switching.validate();
  if (!(design.k22 >= 0.0)) throw std::invalid_argument("k22 must be >= 0");
  if (!(design.opt_gain_scale >= 0.0)) throw std::invalid_argument("opt_gain_scale must be >= 0");
  StrandControllerConfig cfg;
  cfg.p = solve_riccati(plant, design.q, design.r);
  cfg.k21 = design.k21.value_or(cancellation_gain(plant));
  cfg.k22 = design.k22;
  cfg.q = design.q;
  cfg.r = design.r;
  cfg.switching = design.switching;
  cfg.enable_sm = design.enable_sm;
  cfg.enable_opt = design.enable_opt;
  cfg.opt_gain_scale = design.opt_gain_scale;
  return cfg;
}

SlidingState update_sliding_surface(const SlidingState& state, const PlantParams& plant,
                                    const StrandControllerConfig& cfg, double e2_now, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("update_sliding_surface: dt must be > 0");
  const double pole = closed_loop_pole(plant, cfg.opt_gain(plant));
  SlidingState next;
  next.z = state.z + 0.5 * dt * pole * (state.e2 + e2_now);
  next.e2 = e2_now;
  next.s = e2_now - next.z;
  return next;
}

StrandControl strand_control(const StrandControllerConfig& cfg, const PlantParams& plant,
                             double x1, double x2r, double x2, const SlidingState& sliding) {
  StrandControl out;
  out.u_cancel = -cfg.k21 * x1;
  if (cfg.enable_sm) out.u_sm = cfg.k22 * switching_function(sliding.s, cfg.switching);
  if (cfg.enable_opt) out.u_opt = cfg.opt_gain(plant) * (x2r - x2);
  out.u2 = out.u_cancel + out.u_sm + out.u_opt;
  return out;
}

double equivalent_control(const PlantParams& p, double x2r_dot, double x2r, double eta2) {
  if (p.b2 == 0.0) throw std::invalid_argument("equivalent_control: b2 must be nonzero");
  return (x2r_dot - p.a2 * x2r - eta2) / p.b2;
}

GainCertificate certify_gain(double min_gain, double configured, double input_gain) {
  GainCertificate c;
  c.min_gain = min_gain;
  c.configured_gain = configured;
  c.margin = configured - min_gain;
  c.alpha = input_gain * c.margin;
  c.satisfied = c.margin > 0.0;
  return c;
}

}  // namespace extrude
