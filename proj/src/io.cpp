#include "extrudesim/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "extrudesim/svg.hpp"

namespace extrude {

using nlohmann::json;

std::string format_double(double v) {
  std::array<char, 40> buf{};
  auto [end, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  if (ec != std::errc{}) return "nan";
  return {buf.data(), end};
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << kTrajectoryHeader << '\n';
  std::string line;
  for (const auto& x : traj) {
    line.clear();
    for (double v : {x.t, x.x1, x.x1r, x.x2, x.x2r, x.u1, x.u2, x.u_cancel, x.u_sm, x.u_opt,
                     x.eta1, x.eta2, x.s, x.W1, x.W2}) {
      if (!line.empty()) line += ',';
      line += format_double(v);
    }
    out << line << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_trajectory_csv(out, traj);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json certificate_json(const GainCertificate& c) {
  return {{"min_gain", c.min_gain},
          {"configured_gain", c.configured_gain},
          {"margin", c.margin},
          {"alpha", c.alpha},
          {"satisfied", c.satisfied}};
}

}  // namespace

json metrics_to_json(const Metrics& m) {
  return {{"max_err1_pct", m.max_err1_pct},
          {"max_err2_pct", m.max_err2_pct},
          {"max_err1_post_pct", m.max_err1_post_pct},
          {"max_err2_post_pct", m.max_err2_post_pct},
          {"ss_err1_pct", m.ss_err1_pct},
          {"ss_err2_pct", m.ss_err2_pct},
          {"control_effort_u1", m.control_effort_u1},
          {"control_effort_u2", m.control_effort_u2},
          {"cost_J", m.cost_J},
          {"reach_time_1", optional_number(m.reach_time_1)},
          {"reach_time_s", optional_number(m.reach_time_s)},
          {"fraction_in_band", m.fraction_in_band},
          {"post_window_start", m.post_window_start},
          {"ref_scale_1", m.ref_scale_1},
          {"ref_scale_2", m.ref_scale_2},
          {"absolute_errors_1", m.absolute_errors_1},
          {"absolute_errors_2", m.absolute_errors_2}};
}

json violation_to_json(const Violation& v) {
  return {{"signal", v.signal}, {"t_first", v.t_first}, {"t_last", v.t_last},
          {"count", v.count},   {"worst", v.worst},     {"bound", v.bound},
          {"message", v.message}};
}

json run_report_json(const Scenario& sc, const SimResult& r) {
  const Diagnostics& d = r.diagnostics;
  json violations = json::array();
  for (const auto& v : d.violations) violations.push_back(violation_to_json(v));
  return {{"scenario", sc.name},
          {"horizon_s", sc.sim.horizon_s},
          {"step_s", sc.sim.step_s},
          {"steps", d.steps},
          {"metrics", metrics_to_json(r.metrics)},
          {"design_plant", plant_to_json(d.design_plant)},
          {"simulated_plant", plant_to_json(d.simulated_plant)},
          {"sampled_plant", d.sampled_plant},
          {"riccati_p", d.riccati_p},
          {"k21", d.k21},
          {"opt_gain", d.opt_gain},
          {"sliding_pole", d.sliding_pole},
          {"certificates", {{"k1", certificate_json(d.k1_certificate)},
                            {"k22", certificate_json(d.k22_certificate)}}},
          {"forced", d.forced},
          {"violations", violations}};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

void write_run_outputs(const std::filesystem::path& dir, const Scenario& scenario,
                       const SimResult& result, bool plot) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const Trajectory traj = decimate(result.trajectory, scenario.sim.record_every);
  write_trajectory_csv(dir / "trajectory.csv", traj);
  write_json_file(dir / "metrics.json", run_report_json(scenario, result));
  if (!plot) return;

  std::vector<double> t;
  t.reserve(traj.size());
  for (const auto& x : traj) t.push_back(x.t);
  auto column = [&](double TrajectorySample::*field) {
    std::vector<double> v;
    v.reserve(traj.size());
    for (const auto& x : traj) v.push_back(x.*field);
    return v;
  };

  svg::LineChartOptions track;
  track.title = scenario.name + ": states and references";
  track.y_label = "velocity";
  write_text_file(dir / "tracking.svg",
                  svg::line_chart({{"x1", t, column(&TrajectorySample::x1)},
                                   {"x1r", t, column(&TrajectorySample::x1r)},
                                   {"x2", t, column(&TrajectorySample::x2)},
                                   {"x2r", t, column(&TrajectorySample::x2r)}},
                                  track));

  svg::LineChartOptions ctrl;
  ctrl.title = scenario.name + ": control inputs";
  ctrl.y_label = "control";
  write_text_file(dir / "control.svg",
                  svg::line_chart({{"u1", t, column(&TrajectorySample::u1)},
                                   {"u2", t, column(&TrajectorySample::u2)},
                                   {"u_cancel", t, column(&TrajectorySample::u_cancel)},
                                   {"u_sm", t, column(&TrajectorySample::u_sm)},
                                   {"u_opt", t, column(&TrajectorySample::u_opt)}},
                                  ctrl));
}

}  // namespace extrude
