#include "extrudesim/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "extrudesim/io.hpp"
#include "extrudesim/svg.hpp"

namespace extrude {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw ScenarioError("sweep: " + what); }

double finite_number(const json& j, const std::string& ctx) {
  if (!j.is_number()) fail(ctx + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(ctx + ": expected a finite number");
  return v;
}

SweepAxis axis_from_json(const json& j, std::size_t index) {
  const std::string ctx = "axes[" + std::to_string(index) + "]";
  if (!j.is_object()) fail(ctx + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "path" && key != "values" && key != "range" && key != "scale_by")
      fail(ctx + ": unknown key '" + key + "'");
  }
  SweepAxis axis;
  if (!j.contains("path") || !j["path"].is_string() || j["path"].get<std::string>().empty())
    fail(ctx + ".path: expected a non-empty string");
  axis.path = j["path"].get<std::string>();

  const bool has_values = j.contains("values");
  const bool has_range = j.contains("range");
  if (has_values == has_range) fail(ctx + ": give exactly one of 'values' or 'range'");
  if (has_values) {
    if (!j["values"].is_array() || j["values"].empty())
      fail(ctx + ".values: expected a non-empty array");
    for (const auto& v : j["values"]) axis.values.push_back(finite_number(v, ctx + ".values"));
  } else {
    const json& r = j["range"];
    if (!r.is_object()) fail(ctx + ".range: expected an object");
    for (const auto& [key, _] : r.items()) {
      if (key != "from" && key != "to" && key != "count" && key != "spacing")
        fail(ctx + ".range: unknown key '" + key + "'");
    }
    if (!r.contains("from") || !r.contains("to") || !r.contains("count"))
      fail(ctx + ".range: needs from, to and count");
    const double from = finite_number(r["from"], ctx + ".range.from");
    const double to = finite_number(r["to"], ctx + ".range.to");
    if (!r["count"].is_number_integer() || r["count"].get<long long>() < 1)
      fail(ctx + ".range.count: expected a positive integer");
    const auto count = r["count"].get<std::size_t>();
    const std::string spacing = r.value("spacing", std::string("linear"));
    if (spacing == "linear") {
      axis.values = linspace(from, to, count);
    } else if (spacing == "log") {
      if (!(from > 0.0 && to > 0.0)) fail(ctx + ".range: log spacing needs positive bounds");
      axis.values = logspace(from, to, count);
    } else {
      fail(ctx + ".range.spacing: expected linear or log");
    }
  }
  if (j.contains("scale_by")) {
    if (!j["scale_by"].is_string()) fail(ctx + ".scale_by: expected a string");
    const auto s = j["scale_by"].get<std::string>();
    if (s != "min_gain_k1" && s != "min_gain_k22")
      fail(ctx + ".scale_by: expected min_gain_k1 or min_gain_k22");
    axis.scale_by = s;
  }
  return axis;
}

std::string point_label(const std::vector<SweepAxis>& axes, const std::vector<double>& values) {
  std::ostringstream o;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (a) o << ", ";
    o << axes[a].path << "=" << format_double(values[a]);
  }
  return o.str();
}

SweepRow run_point(const SweepPlan& plan, std::size_t point, std::size_t sample) {
  SweepRow row;
  row.point = point;
  row.sample = sample;
  row.axis_values = plan.point_values[point];
  Scenario sc = plan.points[point];
  if (!plan.samples[point].empty()) {
    sc.true_plant = plan.samples[point][sample];
    sc.uncertainty.reset();
  }
  row.simulated_plant = sc.simulated_plant();
  try {
    const SimResult r = simulate(sc);
    row.metrics = r.metrics;
    row.simulated_plant = r.diagnostics.simulated_plant;
    row.status = RunStatus::ok;
  } catch (const ValidationFailed& e) {
    row.status = RunStatus::invalid;
    row.message = e.what();
  } catch (const DivergenceError& e) {
    row.status = RunStatus::diverged;
    row.message = e.what();
  } catch (const std::exception& e) {
    row.status = RunStatus::error;
    row.message = e.what();
  } catch (...) {
    row.status = RunStatus::error;
    row.message = "unknown failure";
  }
  return row;
}

SweepResult result_shell(const SweepGrid& grid, const SweepPlan& plan) {
  SweepResult r;
  r.name = grid.name;
  r.axes = grid.axes;
  r.applied_values = plan.applied_values;
  r.samples = grid.monte_carlo ? grid.monte_carlo->n : 1;
  r.rows.resize(grid.run_count());
  return r;
}

}  // namespace

std::vector<double> linspace(double from, double to, std::size_t count) {
  if (count == 0) throw std::invalid_argument("linspace: count must be >= 1");
  if (count == 1) return {from};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = from + (to - from) * static_cast<double>(i) / static_cast<double>(count - 1);
  out.back() = to;
  return out;
}

std::vector<double> logspace(double from, double to, std::size_t count) {
  if (!(from > 0.0 && to > 0.0)) throw std::invalid_argument("logspace: bounds must be > 0");
  auto exps = linspace(std::log10(from), std::log10(to), count);
  for (double& e : exps) e = std::pow(10.0, e);
  exps.front() = from;
  exps.back() = to;
  return exps;
}

std::size_t SweepGrid::point_count() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

std::size_t SweepGrid::run_count() const {
  return point_count() * (monte_carlo ? std::max<std::size_t>(1, monte_carlo->n) : 1);
}

SweepGrid sweep_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) fail("expected an object");
  for (const auto& [key, _] : doc.items()) {
    static const char* allowed[] = {"name",        "description", "base_scenario", "base",
                                    "axes",        "monte_carlo", "max_runs",      "output_dir",
                                    "surface_metrics"};
    if (std::none_of(std::begin(allowed), std::end(allowed), [&](const char* a) { return key == a; }))
      fail("unknown key '" + key + "'");
  }
  SweepGrid g;
  g.name = doc.value("name", std::string("sweep"));

  const bool has_path = doc.contains("base_scenario");
  const bool has_inline = doc.contains("base");
  if (has_path == has_inline) fail("give exactly one of 'base_scenario' or 'base'");
  if (has_path) {
    if (!doc["base_scenario"].is_string()) fail("base_scenario: expected a path string");
    std::filesystem::path p = doc["base_scenario"].get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    g.base = read_json_file(p);
  } else {
    g.base = doc["base"];
  }

  if (!doc.contains("axes") || !doc["axes"].is_array()) fail("axes: expected an array");
  const json& axes = doc["axes"];
  if (axes.empty() || axes.size() > 2) fail("axes: expected 1 or 2 axes");
  for (std::size_t i = 0; i < axes.size(); ++i) g.axes.push_back(axis_from_json(axes[i], i));

  if (doc.contains("monte_carlo") && !doc["monte_carlo"].is_null()) {
    const json& mc = doc["monte_carlo"];
    if (!mc.is_object()) fail("monte_carlo: expected an object");
    for (const auto& [key, _] : mc.items()) {
      if (key != "n" && key != "sampler") fail("monte_carlo: unknown key '" + key + "'");
    }
    if (!mc.contains("n") || !mc["n"].is_number_integer() || mc["n"].get<long long>() < 1)
      fail("monte_carlo.n: expected a positive integer");
    MonteCarlo m;
    m.n = mc["n"].get<std::size_t>();
    if (!mc.contains("sampler")) fail("monte_carlo: missing 'sampler'");
    m.sampler = sampler_from_json(mc["sampler"]);
    g.monte_carlo = m;
  }

  if (doc.contains("max_runs")) {
    if (!doc["max_runs"].is_number_integer() || doc["max_runs"].get<long long>() < 1)
      fail("max_runs: expected a positive integer");
    g.max_runs = doc["max_runs"].get<std::size_t>();
  }
  if (doc.contains("surface_metrics")) {
    if (!doc["surface_metrics"].is_array()) fail("surface_metrics: expected an array of names");
    for (const auto& m : doc["surface_metrics"]) {
      if (!m.is_string()) fail("surface_metrics: expected an array of names");
      const auto name = m.get<std::string>();
      const auto& known = metric_names();
      if (std::find(known.begin(), known.end(), name) == known.end())
        fail("surface_metrics: unknown metric '" + name + "'");
      g.surface_metrics.push_back(name);
    }
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) fail("output_dir: expected a path string");
    std::filesystem::path p = doc["output_dir"].get<std::string>();
    g.output_dir = p.is_relative() ? base_dir / p : p;
  }
  return g;
}

SweepGrid load_sweep(const std::filesystem::path& path) {
  return sweep_from_json(read_json_file(path), path.parent_path());
}

SweepPlan plan_sweep(const SweepGrid& grid) {
  if (grid.axes.empty() || grid.axes.size() > 2) fail("expected 1 or 2 axes");
  if (grid.run_count() > grid.max_runs) {
    throw CapExceeded("sweep '" + grid.name + "' needs " + std::to_string(grid.run_count()) +
                      " runs, cap is " + std::to_string(grid.max_runs));
  }

  SweepPlan plan;
  std::optional<Scenario> base;
  for (const auto& axis : grid.axes) {
    std::vector<double> applied = axis.values;
    if (axis.scale_by) {
      if (!base) base = scenario_from_json(grid.base);
      const double gain = *axis.scale_by == "min_gain_k1" ? base->min_gain_k1() : base->min_gain_k22();
      for (double& v : applied) v *= gain;
    }
    plan.applied_values.push_back(std::move(applied));
  }

  const std::size_t points = grid.point_count();
  plan.points.reserve(points);
  for (std::size_t p = 0; p < points; ++p) {
    // Row-major: the last axis varies fastest.
    std::vector<double> values(grid.axes.size());
    std::size_t rem = p;
    for (std::size_t a = grid.axes.size(); a-- > 0;) {
      const auto& av = plan.applied_values[a];
      values[a] = av[rem % av.size()];
      rem /= av.size();
    }
    json doc = grid.base;
    for (std::size_t a = 0; a < grid.axes.size(); ++a) set_json_path(doc, grid.axes[a].path, values[a]);
    try {
      plan.points.push_back(scenario_from_json(doc));
    } catch (const ScenarioError& e) {
      fail("point " + std::to_string(p) + " (" + point_label(grid.axes, values) + "): " + e.what());
    }
    std::vector<PlantParams> samples;
    if (grid.monte_carlo) {
      // Common random numbers: every point draws from the same seed.
      try {
        samples = sample_plant(grid.monte_carlo->sampler, plan.points.back().plant, grid.monte_carlo->n);
      } catch (const ResampleCapExceeded& e) {
        fail("point " + std::to_string(p) + ": " + e.what());
      }
    }
    plan.point_values.push_back(std::move(values));
    plan.samples.push_back(std::move(samples));
  }
  return plan;
}

SweepResult run_sweep(const SweepGrid& grid, int jobs) {
  const SweepPlan plan = plan_sweep(grid);
  SweepResult result = result_shell(grid, plan);
  const std::size_t samples = result.samples;
  const auto total = static_cast<std::ptrdiff_t>(result.rows.size());
  const int threads = std::max(1, jobs);
  // Rows are written by index, so the order never depends on scheduling.
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < total; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    result.rows[idx] = run_point(plan, idx / samples, idx % samples);
  }
  return result;
}

SweepResult run_sweep_serial(const SweepGrid& grid) {
  const SweepPlan plan = plan_sweep(grid);
  SweepResult result = result_shell(grid, plan);
  for (std::size_t i = 0; i < result.rows.size(); ++i)
    result.rows[i] = run_point(plan, i / result.samples, i % result.samples);
  return result;
}

const char* status_name(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::diverged: return "diverged";
    case RunStatus::invalid: return "invalid";
    case RunStatus::error: return "error";
  }
  return "error";
}

std::size_t SweepResult::count(RunStatus s) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [s](const SweepRow& r) { return r.status == s; }));
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {
      "max_err1_pct",      "max_err2_pct",      "max_err1_post_pct", "max_err2_post_pct",
      "ss_err1_pct",       "ss_err2_pct",       "control_effort_u1", "control_effort_u2",
      "cost_J",            "reach_time_1",      "reach_time_s",      "fraction_in_band"};
  return names;
}

double metric_value(const Metrics& m, const std::string& name) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (name == "max_err1_pct") return m.max_err1_pct;
  if (name == "max_err2_pct") return m.max_err2_pct;
  if (name == "max_err1_post_pct") return m.max_err1_post_pct;
  if (name == "max_err2_post_pct") return m.max_err2_post_pct;
  if (name == "ss_err1_pct") return m.ss_err1_pct;
  if (name == "ss_err2_pct") return m.ss_err2_pct;
  if (name == "control_effort_u1") return m.control_effort_u1;
  if (name == "control_effort_u2") return m.control_effort_u2;
  if (name == "cost_J") return m.cost_J;
  if (name == "reach_time_1") return m.reach_time_1.value_or(nan);
  if (name == "reach_time_s") return m.reach_time_s.value_or(nan);
  if (name == "fraction_in_band") return m.fraction_in_band;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

Surface error_surface(const SweepResult& result, const std::string& metric) {
  (void)metric_value(Metrics{}, metric);
  if (result.axes.size() != 2)
    throw std::invalid_argument("error_surface needs a two-axis sweep (got " +
                                std::to_string(result.axes.size()) + ")");
  Surface s;
  s.metric = metric;
  s.row_path = result.axes[0].path;
  s.col_path = result.axes[1].path;
  s.row_headers = result.applied_values[0];
  s.col_headers = result.applied_values[1];
  const std::size_t nr = s.row_headers.size(), nc = s.col_headers.size();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  s.mean.assign(nr, std::vector<double>(nc, nan));
  s.stddev.assign(nr, std::vector<double>(nc, nan));

  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nc; ++j) {
      const std::size_t point = i * nc + j;
      std::vector<double> vals;
      for (std::size_t k = 0; k < result.samples; ++k) {
        const SweepRow& row = result.rows[point * result.samples + k];
        if (row.status != RunStatus::ok) continue;
        const double v = metric_value(row.metrics, metric);
        if (std::isfinite(v)) vals.push_back(v);
      }
      if (vals.empty()) continue;
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      s.mean[i][j] = mean;
      s.stddev[i][j] = vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1)) : 0.0;
    }
  }
  return s;
}

namespace {

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

void write_table(const std::filesystem::path& path, const Surface& s,
                 const std::vector<std::vector<double>>& table) {
  std::ostringstream o;
  o << csv_field(s.row_path + "\\" + s.col_path);
  for (double c : s.col_headers) o << ',' << format_double(c);
  o << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    o << format_double(s.row_headers[i]);
    for (double v : table[i]) o << ',' << csv_number(v);
    o << '\n';
  }
  write_text_file(path, o.str());
}

}  // namespace

void write_results_csv(const std::filesystem::path& path, const SweepResult& result) {
  std::ostringstream o;
  o << "point,sample";
  for (const auto& a : result.axes) o << ',' << csv_field(a.path);
  o << ",status,a1,b1,a2,a21,b2";
  for (const auto& m : metric_names()) o << ',' << m;
  o << ",message\n";
  for (const auto& r : result.rows) {
    o << r.point << ',' << r.sample;
    for (double v : r.axis_values) o << ',' << format_double(v);
    o << ',' << status_name(r.status);
    const auto& p = r.simulated_plant;
    for (double v : {p.a1, p.b1, p.a2, p.a21, p.b2}) o << ',' << format_double(v);
    for (const auto& m : metric_names()) {
      o << ',';
      if (r.status == RunStatus::ok) o << csv_number(metric_value(r.metrics, m));
    }
    o << ',' << csv_field(r.message) << '\n';
  }
  write_text_file(path, o.str());
}

void write_surface_csv(const std::filesystem::path& path, const Surface& surface) {
  write_table(path, surface, surface.mean);
  auto std_path = path;
  std_path.replace_filename(path.stem().string() + "_std" + path.extension().string());
  write_table(std_path, surface, surface.stddev);
}

json summary_json(const SweepResult& result) {
  json axes = json::array();
  for (std::size_t a = 0; a < result.axes.size(); ++a) {
    json ax = {{"path", result.axes[a].path},
               {"values", result.axes[a].values},
               {"applied_values", result.applied_values[a]}};
    ax["scale_by"] = result.axes[a].scale_by ? json(*result.axes[a].scale_by) : json(nullptr);
    axes.push_back(ax);
  }
  json failed = json::array();
  for (const auto& r : result.rows) {
    if (r.status == RunStatus::ok) continue;
    failed.push_back({{"point", r.point},
                      {"sample", r.sample},
                      {"status", status_name(r.status)},
                      {"message", r.message}});
  }
  return {{"name", result.name},
          {"axes", axes},
          {"samples_per_point", result.samples},
          {"runs", result.rows.size()},
          {"status_counts",
           {{"ok", result.count(RunStatus::ok)},
            {"diverged", result.count(RunStatus::diverged)},
            {"invalid", result.count(RunStatus::invalid)},
            {"error", result.count(RunStatus::error)}}},
          {"failed", failed}};
}

void write_sweep_outputs(const std::filesystem::path& dir, const SweepResult& result,
                         const std::vector<std::string>& surface_metrics) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  write_results_csv(dir / "results.csv", result);
  json summary = summary_json(result);
  json surfaces = json::array();
  if (result.axes.size() == 2) {
    for (const auto& m : surface_metrics) {
      const auto file = "surface_" + m + ".csv";
      write_surface_csv(dir / file, error_surface(result, m));
      surfaces.push_back(file);
    }
  }
  summary["surfaces"] = surfaces;
  write_json_file(dir / "summary.json", summary);
}

void write_sweep_plots(const std::filesystem::path& dir, const SweepResult& result,
                       const std::vector<std::string>& metrics) {
  for (const auto& m : metrics) {
    if (result.axes.size() == 2) {
      const Surface s = error_surface(result, m);
      svg::HeatmapOptions opts;
      opts.title = result.name + ": " + m;
      opts.row_label = s.row_path;
      opts.col_label = s.col_path;
      write_text_file(dir / ("surface_" + m + ".svg"),
                      svg::heatmap(s.mean, s.row_headers, s.col_headers, opts));
      continue;
    }
    const auto& xs = result.applied_values.front();
    std::vector<double> ys(xs.size(), 0.0);
    for (std::size_t p = 0; p < xs.size(); ++p) {
      double acc = 0.0;
      std::size_t n = 0;
      for (std::size_t k = 0; k < result.samples; ++k) {
        const SweepRow& row = result.rows[p * result.samples + k];
        if (row.status != RunStatus::ok) continue;
        const double v = metric_value(row.metrics, m);
        if (!std::isfinite(v)) continue;
        acc += v;
        ++n;
      }
      ys[p] = n ? acc / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    }
    svg::LineChartOptions opts;
    opts.title = result.name + ": " + m;
    opts.x_label = result.axes.front().path;
    opts.y_label = m;
    write_text_file(dir / ("sweep_" + m + ".svg"), svg::line_chart({{m, xs, ys}}, opts));
  }
}

}  // namespace extrude
