#include "extrudesim/presets.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "extrudesim/analysis.hpp"
#include "extrudesim/io.hpp"
#include "extrudesim/sim.hpp"

namespace extrude {

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& preset_files();
}

using nlohmann::json;

namespace {

std::optional<std::string_view> embedded(const std::string& file) {
  for (const auto& [name, text] : detail::preset_files()) {
    if (name == file) return text;
  }
  return std::nullopt;
}

json embedded_json(const std::string& name) {
  auto text = embedded(name);
  if (!text) throw UnknownPreset("unknown preset '" + name + "'");
  return parse_json_text(*text, "preset " + name);
}

Scenario with_overrides(json doc, const std::vector<std::pair<std::string, json>>& sets) {
  for (const auto& [path, value] : sets) set_json_path(doc, path, value);
  return scenario_from_json(doc);
}

double absolute_error(double pct, double scale, bool absolute) {
  return absolute ? pct : pct * scale / 100.0;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"case1", "case2", "case3", "fig5a", "fig5b"};
  return names;
}

bool is_sweep_preset(const std::string& name) {
  const json doc = embedded_json(name);
  return doc.contains("axes");
}

json preset_document(const std::string& name) {
  json doc = embedded_json(name);
  if (doc.contains("base_scenario")) {
    std::string base = doc["base_scenario"].get<std::string>();
    if (base.size() > 5 && base.ends_with(".json")) base.resize(base.size() - 5);
    doc.erase("base_scenario");
    doc["base"] = embedded_json(base);
  }
  return doc;
}

Scenario preset_scenario(const std::string& name) {
  const json doc = preset_document(name);
  if (doc.contains("axes")) throw UnknownPreset("preset '" + name + "' is a sweep");
  return scenario_from_json(doc);
}

SweepGrid preset_sweep(const std::string& name) {
  const json doc = preset_document(name);
  if (!doc.contains("axes")) throw UnknownPreset("preset '" + name + "' is a single scenario");
  return sweep_from_json(doc, {});
}

bool PresetReport::all_passed() const {
  return std::all_of(assertions.begin(), assertions.end(),
                     [](const Assertion& a) { return a.passed; });
}

json PresetReport::to_json() const {
  json list = json::array();
  for (const auto& a : assertions) {
    list.push_back({{"id", a.id},
                    {"description", a.description},
                    {"passed", a.passed},
                    {"details", a.details}});
  }
  return {{"preset", preset}, {"seed", seed}, {"passed", all_passed()}, {"assertions", list}};
}

Assertion check_reaching_family(const json& base, std::uint64_t seed, std::size_t count) {
  Assertion a;
  a.id = "nozzle_reaching_family";
  a.description =
      "signum nozzle law with K1 = min_gain_k1 + 0.5/b1 keeps |e1| <= 2*b1*K1*dt after "
      "|e1(0)|/alpha1 + 0.05 s";
  constexpr double alpha1 = 0.5;
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  double worst_ratio = 0.0;
  json runs = json::array();
  bool ok = true;
  for (std::size_t i = 0; i < count; ++i) {
    const double a1 = -uniform(0.1, 3.0);
    const double b1 = uniform(0.5, 3.0);
    const double x1r_bar = uniform(0.5, 2.0);
    const double eta1_bar = uniform(0.1, 2.0);
    const double x1r = uniform(0.0, x1r_bar);
    const double x10 = uniform(-1.0, 3.0);
    const double sign = uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;

    json doc = base;
    set_json_path(doc, "name", "reaching_" + std::to_string(i));
    set_json_path(doc, "plant.a1", a1);
    set_json_path(doc, "plant.b1", b1);
    set_json_path(doc, "bounds.x1r_bar", x1r_bar);
    set_json_path(doc, "bounds.x1rd_bar", 0.0);
    set_json_path(doc, "bounds.eta1_bar", eta1_bar);
    set_json_path(doc, "references.x1r", json{{"kind", "constant"}, {"value", x1r}});
    set_json_path(doc, "disturbances.eta1",
                  json{{"kind", "quadratic-pulse"},
                       {"amplitude", 0.9 * eta1_bar * sign},
                       {"t_start", 30.0},
                       {"t_end", 60.0}});
    set_json_path(doc, "initial.x1", x10);
    set_json_path(doc, "step_s", 1e-3);
    set_json_path(doc, "controllers.nozzle", json{{"k1", 0.0}, {"switching", "signum"}});
    Scenario sc = scenario_from_json(doc);
    sc.controllers.nozzle.k1 = sc.min_gain_k1() + alpha1 / b1;

    const SimResult r = simulate(sc);
    const double dt = sc.sim.step_s;
    const double band = 2.0 * b1 * sc.controllers.nozzle.k1 * dt;
    const double t_reach = std::abs(x1r - x10) / alpha1 + 0.05;
    double worst = 0.0;
    for (const auto& x : r.trajectory) {
      if (x.t >= t_reach) worst = std::max(worst, std::abs(x.x1r - x.x1));
    }
    const double ratio = worst / band;
    worst_ratio = std::max(worst_ratio, ratio);
    ok = ok && ratio <= 1.0;
    runs.push_back({{"a1", a1},
                    {"b1", b1},
                    {"k1", sc.controllers.nozzle.k1},
                    {"t_reach_bound", t_reach},
                    {"max_err_after", worst},
                    {"band", band},
                    {"ratio", ratio}});
  }
  a.passed = ok;
  a.details = {{"seed", seed}, {"count", count}, {"worst_ratio", worst_ratio}, {"runs", runs}};
  return a;
}

Assertion check_gain_margin(const json& base) {
  Assertion a;
  a.id = "k1_margin_comparison";
  a.description = "post-disturbance nozzle error is lower at the configured K1 than at half its margin";
  const Scenario full = scenario_from_json(base);
  Scenario half = full;
  const double kmin = full.min_gain_k1();
  half.controllers.nozzle.k1 = kmin + 0.5 * (full.controllers.nozzle.k1 - kmin);
  const Metrics mf = simulate(full).metrics;
  const Metrics mh = simulate(half).metrics;
  a.passed = full.controllers.nozzle.k1 > kmin && mf.max_err1_post_pct < mh.max_err1_post_pct;
  a.details = {{"min_gain_k1", kmin},
               {"k1", full.controllers.nozzle.k1},
               {"k1_half_margin", half.controllers.nozzle.k1},
               {"max_err1_post_pct", mf.max_err1_post_pct},
               {"max_err1_post_pct_half_margin", mh.max_err1_post_pct}};
  return a;
}

Assertion check_k1_trend(const SweepResult& sweep, const Scenario& base) {
  Assertion a;
  a.id = "k1_error_trend";
  a.description =
      "post-disturbance max nozzle error nonincreasing in K1; at the largest K1 it matches the "
      "chatter band 2*b1*K1*dt within 50%";
  std::vector<double> errs;
  bool all_ok = sweep.axes.size() == 1 && sweep.samples == 1;
  for (const auto& row : sweep.rows) {
    all_ok = all_ok && row.status == RunStatus::ok;
    errs.push_back(row.metrics.max_err1_post_pct);
  }
  if (!all_ok || errs.empty()) {
    a.details = {{"error", "sweep must be a single-axis K1 sweep with all runs ok"}};
    return a;
  }
  const auto& k1s = sweep.applied_values.front();
  const SweepRow& last = sweep.rows.back();
  const double err_abs = absolute_error(last.metrics.max_err1_post_pct, last.metrics.ref_scale_1,
                                        last.metrics.absolute_errors_1);
  const double band = 2.0 * base.plant.b1 * k1s.back() * base.sim.step_s;
  const double band_ratio = err_abs / band;
  const bool monotone = nonincreasing(errs, 0.0);
  a.passed = monotone && std::abs(band_ratio - 1.0) <= 0.5;
  a.details = {{"k1", k1s},
               {"max_err1_post_pct", errs},
               {"nonincreasing", monotone},
               {"largest_k1_abs_error", err_abs},
               {"chatter_band", band},
               {"band_ratio", band_ratio}};
  return a;
}

Assertion check_sliding_motion(const json& base) {
  Assertion a;
  a.id = "sliding_motion_dynamics";
  a.description =
      "with eta2 = 0, the smoothed finite difference of e2 matches (a2 - b2^2 P/r) e2 within 5% "
      "after |s| <= delta";
  json doc = base;
  set_json_path(doc, "disturbances.eta2", json{{"kind", "zero"}});
  const Scenario sc = scenario_from_json(doc);
  const SimResult r = simulate(sc);
  const double pole = r.diagnostics.sliding_pole;
  SlidingDynamicsOptions opts;
  opts.delta = sc.sim.sliding_band_delta;
  const auto check = check_sliding_dynamics(r.trajectory, pole, opts);
  a.details = {{"pole", pole},
               {"riccati_p", r.diagnostics.riccati_p},
               {"reach_time_s", r.metrics.reach_time_s ? json(*r.metrics.reach_time_s) : json(nullptr)},
               {"smoothing_stride", opts.stride},
               {"smoothing_window", opts.window}};
  if (!check) {
    a.details["error"] = "sliding surface never reached or no qualifying points";
    return a;
  }
  a.passed = check->worst_rel_error <= 0.05;
  a.details["points"] = check->points;
  a.details["worst_rel_error"] = check->worst_rel_error;
  return a;
}

Assertion check_pulse_band(const json& base) {
  Assertion a;
  a.id = "sliding_band_under_pulse";
  a.description = "with the eta2 pulse and K22 above min_gain_k22, |s| <= 2*delta throughout the pulse";
  const Scenario sc = scenario_from_json(base);
  const SimResult r = simulate(sc);
  const auto* pulse = std::get_if<DisturbanceProfile::QuadraticPulse>(&sc.eta2.shape());
  if (!pulse) {
    a.details = {{"error", "scenario has no eta2 quadratic pulse"}};
    return a;
  }
  double worst = 0.0;
  for (const auto& x : r.trajectory) {
    if (x.t >= pulse->t_start && x.t <= pulse->t_end) worst = std::max(worst, std::abs(x.s));
  }
  const double delta = sc.sim.sliding_band_delta;
  const auto& cert = r.diagnostics.k22_certificate;
  a.passed = cert.satisfied && worst <= 2.0 * delta;
  a.details = {{"k22", cert.configured_gain},
               {"min_gain_k22", cert.min_gain},
               {"max_abs_s_in_pulse", worst},
               {"limit", 2.0 * delta}};
  return a;
}

Assertion check_lq_optimality(const json& base) {
  Assertion a;
  a.id = "lq_optimality";
  a.description =
      "regulation with a21 = 0, SM off: the Riccati gain costs no more than 0.5x, 0.8x, 1.2x, 2x "
      "of it (strictly less than 0.5x and 2x)";
  const Scenario sc = with_overrides(
      base, {{"plant.a21", 0.0},
             {"controllers.strand.enable_sm", false},
             {"controllers.strand.enable_opt", true},
             {"controllers.strand.q", 1.0},
             {"controllers.strand.r", 1.0},
             {"controllers.strand.opt_gain_scale", 1.0},
             {"disturbances.eta2", json{{"kind", "zero"}}},
             {"references.x2r", json{{"kind", "constant"}, {"value", 0.0}}},
             {"initial.x2", 1.0}});
  const double j_opt = simulate(sc).metrics.cost_J;
  bool ok = true;
  json rows = json::array();
  for (double scale : {0.5, 0.8, 1.2, 2.0}) {
    Scenario s = sc;
    s.controllers.strand.opt_gain_scale = scale;
    const double j = simulate(s).metrics.cost_J;
    const bool strict = scale == 0.5 || scale == 2.0;
    const bool pass = strict ? j_opt < j : j_opt <= j + 1e-6 * j;
    ok = ok && pass;
    rows.push_back({{"scale", scale}, {"cost_J", j}, {"passed", pass}});
  }
  a.passed = ok;
  a.details = {{"cost_J_riccati", j_opt}, {"perturbed", rows}};
  return a;
}

Assertion check_qr_surface(const SweepResult& sweep) {
  Assertion a;
  a.id = "qr_tradeoff_surface";
  a.description =
      "ss_err2_pct decreasing along Q and control_effort_u2 decreasing along R (Spearman rho <= "
      "-0.9 per line); largest-Q row below 5% steady-state error";
  if (sweep.axes.size() != 2 || sweep.axes[0].path != "controllers.strand.q" ||
      sweep.axes[1].path != "controllers.strand.r") {
    a.details = {{"error", "expected a two-axis sweep over controllers.strand.q then .r"}};
    return a;
  }
  const Surface ss = error_surface(sweep, "ss_err2_pct");
  const Surface eff = error_surface(sweep, "control_effort_u2");
  const std::size_t nq = ss.row_headers.size(), nr = ss.col_headers.size();
  bool ok = sweep.count(RunStatus::ok) == sweep.rows.size();

  auto line_ok = [](const std::vector<double>& axis, const std::vector<double>& v, json& out) {
    const auto rho = spearman_rho(axis, v);
    const bool flat = nonincreasing(v, 0.0) && !rho;
    const bool pass = flat || (rho && *rho <= -0.9);
    out.push_back({{"rho", rho ? json(*rho) : json(nullptr)},
                   {"nonincreasing", nonincreasing(v, 0.0)},
                   {"passed", pass}});
    return pass;
  };

  json along_q = json::array();
  for (std::size_t j = 0; j < nr; ++j) {
    std::vector<double> col(nq);
    for (std::size_t i = 0; i < nq; ++i) col[i] = ss.mean[i][j];
    ok = line_ok(ss.row_headers, col, along_q) && ok;
  }
  json along_r = json::array();
  for (std::size_t i = 0; i < nq; ++i) ok = line_ok(ss.col_headers, eff.mean[i], along_r) && ok;

  const auto& top = ss.mean.back();
  const double worst_top = *std::max_element(top.begin(), top.end());
  ok = ok && worst_top < 5.0;
  a.passed = ok;
  a.details = {{"q", ss.row_headers},
               {"r", ss.col_headers},
               {"ss_err2_pct", ss.mean},
               {"control_effort_u2", eff.mean},
               {"ss_err2_along_q", along_q},
               {"effort_along_r", along_r},
               {"largest_q_max_ss_err2_pct", worst_top}};
  return a;
}

Assertion check_sm_pairing(const json& base) {
  Assertion a;
  a.id = "sm_on_off_pairing";
  a.description =
      "under the eta2 pulse, SM on gives a smaller post-disturbance strand error than SM off, "
      "with less than 10% extra control effort";
  Scenario on = scenario_from_json(base);
  on.controllers.strand.enable_sm = true;
  Scenario off = on;
  off.controllers.strand.enable_sm = false;
  const SimResult r_on = simulate(on);
  const SimResult r_off = simulate(off);
  auto post_abs = [](const SimResult& r) {
    double worst = 0.0;
    for (const auto& x : r.trajectory) {
      if (x.t >= r.metrics.post_window_start) worst = std::max(worst, std::abs(x.x2r - x.x2));
    }
    return worst;
  };
  const double e_on = post_abs(r_on), e_off = post_abs(r_off);
  const double ratio = r_on.metrics.control_effort_u2 / r_off.metrics.control_effort_u2;
  a.passed = e_on < e_off && ratio < 1.10;
  a.details = {{"max_post_err2_sm_on", e_on},
               {"max_post_err2_sm_off", e_off},
               {"control_effort_u2_sm_on", r_on.metrics.control_effort_u2},
               {"control_effort_u2_sm_off", r_off.metrics.control_effort_u2},
               {"effort_ratio", ratio},
               {"effort_increase_pct", 100.0 * (ratio - 1.0)}};
  return a;
}

PresetReport run_preset(const std::string& name, const PresetOptions& opts) {
  PresetReport report;
  report.preset = name;
  report.seed = opts.seed;
  const json doc = preset_document(name);

  if (doc.contains("axes")) {
    const SweepGrid grid = sweep_from_json(doc, {});
    const SweepResult result = run_sweep(grid, opts.jobs);
    if (name == "fig5a") {
      report.assertions.push_back(check_k1_trend(result, scenario_from_json(grid.base)));
    } else if (name == "fig5b") {
      report.assertions.push_back(check_qr_surface(result));
    }
    if (opts.out_dir) {
      write_sweep_outputs(*opts.out_dir, result, grid.surface_metrics);
      if (opts.plot) write_sweep_plots(*opts.out_dir, result, grid.surface_metrics);
    }
  } else {
    Scenario sc = scenario_from_json(doc);
    if (sc.uncertainty) sc.uncertainty->seed = opts.seed;
    const SimResult result = simulate(sc);
    if (name == "case1") {
      report.assertions.push_back(check_reaching_family(doc, opts.seed));
      report.assertions.push_back(check_gain_margin(doc));
    } else if (name == "case2") {
      report.assertions.push_back(check_lq_optimality(doc));
    } else if (name == "case3") {
      report.assertions.push_back(check_sliding_motion(doc));
      report.assertions.push_back(check_pulse_band(doc));
      report.assertions.push_back(check_sm_pairing(doc));
    }
    if (opts.out_dir) write_run_outputs(*opts.out_dir, sc, result, opts.plot);
  }

  if (opts.out_dir) write_json_file(*opts.out_dir / "report.json", report.to_json());
  return report;
}

}  // namespace extrude
