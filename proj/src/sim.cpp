#include "extrudesim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace extrude {

namespace {

bool within_limit(double x) { return std::isfinite(x) && std::abs(x) <= kDivergenceLimit; }

SimState advance(const SimState& state, const ClosedLoop& loop, double dt, double t_next) {
  const Controls c = compute_controls(loop, state);
  const double u1 = c.u1;
  const double u2 = c.strand.u2;
  const PlantParams& p = loop.actual;

  auto f = [&](double t, double x1, double x2) {
    return plant_derivatives(p, x1, x2, u1, u2, eval_disturbance(loop.eta1, t),
                             eval_disturbance(loop.eta2, t));
  };

  const double t0 = state.t;
  const double h = dt;
  const PlantRates k1 = f(t0, state.x1, state.x2);
  const PlantRates k2 = f(t0 + 0.5 * h, state.x1 + 0.5 * h * k1.dx1, state.x2 + 0.5 * h * k1.dx2);
  const PlantRates k3 = f(t0 + 0.5 * h, state.x1 + 0.5 * h * k2.dx1, state.x2 + 0.5 * h * k2.dx2);
  const PlantRates k4 = f(t0 + h, state.x1 + h * k3.dx1, state.x2 + h * k3.dx2);

  SimState next;
  next.t = t_next;
  next.x1 = state.x1 + h / 6.0 * (k1.dx1 + 2.0 * k2.dx1 + 2.0 * k3.dx1 + k4.dx1);
  next.x2 = state.x2 + h / 6.0 * (k1.dx2 + 2.0 * k2.dx2 + 2.0 * k3.dx2 + k4.dx2);

  if (!within_limit(next.x1) || !within_limit(next.x2)) {
    std::ostringstream msg;
    msg << "simulation diverged between t=" << state.t << " and t=" << t_next
        << " (last valid x1=" << state.x1 << ", x2=" << state.x2 << ")";
    throw DivergenceError(msg.str(), state);
  }

  const double e2 = eval_reference(loop.x2r, t_next).value - next.x2;
  next.sliding = update_sliding_surface(state.sliding, loop.design, loop.strand, e2, dt);
  return next;
}

TrajectorySample record(const SimState& s, const Controls& c) {
  const double e1 = c.x1r - s.x1;
  return {s.t,
          s.x1,
          c.x1r,
          s.x2,
          c.x2r,
          c.u1,
          c.strand.u2,
          c.strand.u_cancel,
          c.strand.u_sm,
          c.strand.u_opt,
          c.eta1,
          c.eta2,
          s.sliding.s,
          0.5 * e1 * e1,
          0.5 * s.sliding.s * s.sliding.s};
}

template <class F>
double trapezoid(const Trajectory& traj, F&& integrand) {
  double acc = 0.0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double dt = traj[i].t - traj[i - 1].t;
    acc += 0.5 * dt * (integrand(traj[i - 1]) + integrand(traj[i]));
  }
  return acc;
}

std::optional<double> earliest_onset(const DisturbanceProfile& a, const DisturbanceProfile& b) {
  auto oa = a.onset();
  auto ob = b.onset();
  if (oa && ob) return std::min(*oa, *ob);
  return oa ? oa : ob;
}

std::string describe(const std::vector<Violation>& vs) {
  std::ostringstream msg;
  msg << vs.size() << " bound violation(s)";
  for (const auto& v : vs) msg << "\n  " << v.signal << ": " << v.message;
  return msg.str();
}

}  // namespace

ValidationFailed::ValidationFailed(std::vector<Violation> violations)
    : ScenarioError(describe(violations)), violations_(std::move(violations)) {}

ClosedLoop make_closed_loop(const Scenario& sc, std::optional<PlantParams> actual) {
  ClosedLoop loop;
  loop.design = sc.plant;
  loop.actual = actual.value_or(sc.simulated_plant());
  loop.nozzle = sc.controllers.nozzle;
  try {
    loop.strand = design_strand_controller(sc.plant, sc.controllers.strand);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("controllers.strand: ") + e.what());
  }
  loop.x1r = sc.x1r;
  loop.x2r = sc.x2r;
  loop.eta1 = sc.eta1;
  loop.eta2 = sc.eta2;
  return loop;
}

Controls compute_controls(const ClosedLoop& loop, const SimState& s) {
  Controls c;
  c.x1r = eval_reference(loop.x1r, s.t).value;
  c.x2r = eval_reference(loop.x2r, s.t).value;
  c.u1 = nozzle_control(loop.nozzle, c.x1r, s.x1);
  c.strand = strand_control(loop.strand, loop.design, s.x1, c.x2r, s.x2, s.sliding);
  c.eta1 = eval_disturbance(loop.eta1, s.t);
  c.eta2 = eval_disturbance(loop.eta2, s.t);
  return c;
}

SimState initial_state(const ClosedLoop& loop, double x1, double x2) {
  SimState s;
  s.x1 = x1;
  s.x2 = x2;
  s.sliding = SlidingState::start(eval_reference(loop.x2r, 0.0).value - x2);
  return s;
}

SimState step(const SimState& state, const ClosedLoop& loop, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
  return advance(state, loop, dt, state.t + dt);
}

BandCheck band_check(const std::vector<double>& t, const std::vector<double>& v, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("band check: delta must be > 0");
  if (t.size() != v.size()) throw std::invalid_argument("band check: size mismatch");
  BandCheck out;
  std::size_t start = 0;
  for (std::size_t i = v.size(); i-- > 0;) {
    if (std::abs(v[i]) > 2.0 * delta) {
      start = i + 1;
      break;
    }
  }
  std::size_t reach = start;
  while (reach < v.size() && std::abs(v[reach]) > delta) ++reach;
  if (reach >= v.size()) return out;
  out.reach_time = t[reach];
  std::size_t inside = 0;
  for (std::size_t i = reach; i < v.size(); ++i) inside += std::abs(v[i]) <= delta ? 1 : 0;
  out.fraction_in_band = static_cast<double>(inside) / static_cast<double>(v.size() - reach);
  return out;
}

BandCheck sliding_band_check(const Trajectory& traj, double delta) {
  std::vector<double> t, s;
  t.reserve(traj.size());
  s.reserve(traj.size());
  for (const auto& x : traj) {
    t.push_back(x.t);
    s.push_back(x.s);
  }
  return band_check(t, s, delta);
}

Metrics compute_metrics(const Trajectory& traj, const SimConfig& cfg, const MetricOptions& opts) {
  if (traj.empty()) throw std::invalid_argument("compute_metrics: empty trajectory");
  Metrics m;
  m.post_window_start = opts.post_window_start;

  for (const auto& x : traj) {
    m.ref_scale_1 = std::max(m.ref_scale_1, std::abs(x.x1r));
    m.ref_scale_2 = std::max(m.ref_scale_2, std::abs(x.x2r));
  }
  m.absolute_errors_1 = m.ref_scale_1 < 1e-12;
  m.absolute_errors_2 = m.ref_scale_2 < 1e-12;
  const double k1 = m.absolute_errors_1 ? 1.0 : 100.0 / m.ref_scale_1;
  const double k2 = m.absolute_errors_2 ? 1.0 : 100.0 / m.ref_scale_2;

  const double t_end = traj.back().t;
  const double ss_start = t_end - cfg.steady_state_window_s;
  double ss1 = 0.0, ss2 = 0.0;
  std::size_t ss_n = 0;
  for (const auto& x : traj) {
    const double e1 = std::abs(x.x1r - x.x1);
    const double e2 = std::abs(x.x2r - x.x2);
    m.max_err1_pct = std::max(m.max_err1_pct, e1 * k1);
    m.max_err2_pct = std::max(m.max_err2_pct, e2 * k2);
    if (x.t >= opts.post_window_start) {
      m.max_err1_post_pct = std::max(m.max_err1_post_pct, e1 * k1);
      m.max_err2_post_pct = std::max(m.max_err2_post_pct, e2 * k2);
    }
    if (x.t >= ss_start) {
      ss1 += e1;
      ss2 += e2;
      ++ss_n;
    }
  }
  if (ss_n > 0) {
    m.ss_err1_pct = ss1 / static_cast<double>(ss_n) * k1;
    m.ss_err2_pct = ss2 / static_cast<double>(ss_n) * k2;
  }

  m.control_effort_u1 = trapezoid(traj, [](const TrajectorySample& x) { return x.u1 * x.u1; });
  m.control_effort_u2 = trapezoid(traj, [](const TrajectorySample& x) { return x.u2 * x.u2; });
  m.cost_J = trapezoid(traj, [&](const TrajectorySample& x) {
    const double e2 = x.x2r - x.x2;
    return opts.q * e2 * e2 + opts.r * x.u2 * x.u2;
  });

  std::vector<double> t, e1;
  t.reserve(traj.size());
  e1.reserve(traj.size());
  for (const auto& x : traj) {
    t.push_back(x.t);
    e1.push_back(x.x1r - x.x1);
  }
  const double band1 = opts.error1_band > 0.0 ? opts.error1_band : cfg.sliding_band_delta;
  m.reach_time_1 = band_check(t, e1, band1).reach_time;
  const BandCheck sb = sliding_band_check(traj, cfg.sliding_band_delta);
  m.reach_time_s = sb.reach_time;
  m.fraction_in_band = sb.fraction_in_band;
  return m;
}

SimResult simulate(const Scenario& sc, const SimOptions& opts) {
  SimResult result;
  Diagnostics& d = result.diagnostics;

  d.violations = validate(sc);
  if (!d.violations.empty()) {
    const bool config_problem = std::any_of(d.violations.begin(), d.violations.end(),
                                            [](const Violation& v) { return v.signal == "config"; });
    if (config_problem || !opts.force) throw ValidationFailed(d.violations);
    d.forced = true;
  }

  std::optional<PlantParams> actual;
  if (!sc.true_plant && sc.uncertainty) {
    try {
      actual = sample_plant(*sc.uncertainty, sc.plant, 1).front();
    } catch (const ResampleCapExceeded& e) {
      throw ScenarioError(std::string("uncertainty: ") + e.what());
    }
    d.sampled_plant = true;
  }
  const ClosedLoop loop = make_closed_loop(sc, actual);

  d.design_plant = loop.design;
  d.simulated_plant = loop.actual;
  d.riccati_p = loop.strand.p;
  d.k21 = loop.strand.k21;
  d.opt_gain = loop.strand.opt_gain(loop.design);
  d.sliding_pole = closed_loop_pole(loop.design, d.opt_gain);
  d.k1_certificate = certify_gain(sc.min_gain_k1(), loop.nozzle.k1, loop.design.b1);
  d.k22_certificate = certify_gain(sc.min_gain_k22(), loop.strand.k22, loop.design.b2);

  const double dt = sc.sim.step_s;
  const std::size_t n = sc.sim.step_count();
  d.steps = n;

  Trajectory& traj = result.trajectory;
  traj.reserve(n + 1);
  SimState state = initial_state(loop, sc.initial.x1, sc.initial.x2);
  if (!within_limit(state.x1) || !within_limit(state.x2))
    throw ScenarioError("initial state must be finite and within the divergence limit");
  for (std::size_t k = 0; k < n; ++k) {
    traj.push_back(record(state, compute_controls(loop, state)));
    // Time from the step index, so long runs do not accumulate rounding.
    state = advance(state, loop, dt, static_cast<double>(k + 1) * dt);
  }
  traj.push_back(record(state, compute_controls(loop, state)));

  MetricOptions mo;
  mo.q = loop.strand.q;
  mo.r = loop.strand.r;
  mo.post_window_start = earliest_onset(sc.eta1, sc.eta2).value_or(0.0);
  mo.error1_band = std::max(sc.sim.sliding_band_delta, 2.0 * loop.design.b1 * loop.nozzle.k1 * dt);
  result.metrics = compute_metrics(traj, sc.sim, mo);
  return result;
}

Trajectory decimate(const Trajectory& traj, int record_every) {
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  if (record_every == 1) return traj;
  Trajectory out;
  const auto stride = static_cast<std::size_t>(record_every);
  out.reserve(traj.size() / stride + 2);
  for (std::size_t i = 0; i < traj.size(); i += stride) out.push_back(traj[i]);
  if (!traj.empty() && (traj.size() - 1) % stride != 0) out.push_back(traj.back());
  return out;
}

}  // namespace extrude
