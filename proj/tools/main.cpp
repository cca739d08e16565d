// extrudesim command-line entry point.
//
// Exit codes: 0 ok, 1 divergence, 2 I/O or parse error, 3 validation or
// schema error, 4 sweep run cap exceeded, 5 preset assertion failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "extrudesim/io.hpp"
#include "extrudesim/presets.hpp"
#include "extrudesim/scenario.hpp"
#include "extrudesim/sim.hpp"
#include "extrudesim/sweep.hpp"

namespace fs = std::filesystem;
using namespace extrude;

namespace {

enum Exit : int {
  kOk = 0,
  kDiverged = 1,
  kIo = 2,
  kInvalid = 3,
  kCap = 4,
  kAssertion = 5,
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("extrudesim");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("EXTRUDESIM_LOG")) {
    const std::string level = env;
    if (level == "error") spdlog::set_level(spdlog::level::err);
    else if (level == "debug") spdlog::set_level(spdlog::level::debug);
    else if (level != "info") spdlog::warn("EXTRUDESIM_LOG='{}' not recognised, using info", level);
  }
}

nlohmann::json load_with_overrides(const fs::path& path, const std::vector<std::string>& sets) {
  nlohmann::json doc = read_json_file(path);
  for (const auto& s : sets) apply_override(doc, s);
  return doc;
}

void log_violations(const std::vector<Violation>& vs) {
  for (const auto& v : vs) spdlog::error("  {}: {}", v.signal, v.message);
}

struct Common {
  std::string out = "out";
  bool out_given = false;
  bool plot = false;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  bool force = false;
};

int cmd_run(const fs::path& path, const Common& c) {
  Scenario sc = scenario_from_json(load_with_overrides(path, c.sets));
  if (c.seed && sc.uncertainty) sc.uncertainty->seed = *c.seed;
  spdlog::info("running '{}' ({} steps)", sc.name, sc.sim.step_count());
  const SimResult r = simulate(sc, SimOptions{c.force});
  if (r.diagnostics.forced) {
    spdlog::warn("ran despite {} bound violation(s) (--force)", r.diagnostics.violations.size());
    log_violations(r.diagnostics.violations);
  }
  write_run_outputs(c.out, sc, r, c.plot);
  spdlog::info("max_err1 {:.4g}%  max_err2 {:.4g}%  ss_err2 {:.4g}%  J {:.6g}",
               r.metrics.max_err1_pct, r.metrics.max_err2_pct, r.metrics.ss_err2_pct,
               r.metrics.cost_J);
  spdlog::info("wrote {}", c.out);
  return kOk;
}

int cmd_sweep(const fs::path& path, const Common& c) {
  nlohmann::json doc = read_json_file(path);
  SweepGrid grid = sweep_from_json(doc, path.parent_path());
  for (const auto& s : c.sets) apply_override(grid.base, s);
  if (c.seed && grid.monte_carlo) grid.monte_carlo->sampler.seed = *c.seed;
  const fs::path out = c.out_given ? fs::path(c.out) : grid.output_dir.value_or(fs::path(c.out));
  spdlog::info("sweep '{}': {} run(s) on up to {} thread(s)", grid.name, grid.run_count(), c.jobs);
  const SweepResult result = run_sweep(grid, c.jobs);
  write_sweep_outputs(out, result, grid.surface_metrics);
  if (c.plot) write_sweep_plots(out, result, grid.surface_metrics);
  for (const auto& row : result.rows) {
    if (row.status != RunStatus::ok)
      spdlog::warn("point {} sample {}: {}: {}", row.point, row.sample, status_name(row.status),
                   row.message);
  }
  spdlog::info("{} ok of {}; wrote {}", result.count(RunStatus::ok), result.rows.size(), out.string());
  return kOk;
}

int cmd_preset(const std::string& name, const Common& c) {
  PresetOptions opts;
  opts.out_dir = fs::path(c.out);
  opts.plot = c.plot;
  opts.jobs = c.jobs;
  opts.seed = c.seed.value_or(1);
  const PresetReport report = run_preset(name, opts);
  for (const auto& a : report.assertions)
    spdlog::info("{} {}", a.passed ? "PASS" : "FAIL", a.id);
  spdlog::info("wrote {}", c.out);
  return report.all_passed() ? kOk : kAssertion;
}

int cmd_validate(const fs::path& path, const Common& c) {
  const Scenario sc = scenario_from_json(load_with_overrides(path, c.sets));
  const auto violations = validate(sc);
  if (violations.empty()) {
    spdlog::info("'{}' is valid", sc.name);
    return kOk;
  }
  spdlog::error("'{}': {} violation(s)", sc.name, violations.size());
  log_violations(violations);
  return kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Closed-loop simulation of extrusion flow control (sliding mode + LQ)"};
  app.require_subcommand(1);

  Common c;
  std::string target;
  auto add_common = [&](CLI::App* sub, bool with_jobs) {
    sub->add_option("--out", c.out, "Output directory")->each([&](const std::string&) { c.out_given = true; });
    sub->add_flag("--plot", c.plot, "Also write SVG plots");
    sub->add_option("--seed", c.seed, "Seed for plant uncertainty sampling");
    if (with_jobs) sub->add_option("--jobs", c.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "Simulate one scenario");
  run->add_option("scenario", target, "Scenario JSON file")->required();
  add_common(run, false);
  run->add_option("--set", c.sets, "Override PATH=VALUE (repeatable)");
  run->add_flag("--force", c.force, "Run despite bound violations");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep->add_option("sweep", target, "Sweep JSON file")->required();
  add_common(sweep, true);
  sweep->add_option("--set", c.sets, "Override PATH=VALUE on the base scenario (repeatable)");

  auto* preset = app.add_subcommand("preset", "Run a bundled case study and check its assertions");
  preset->add_option("name", target, "Preset name")
      ->required()
      ->check(CLI::IsMember(preset_names()));
  add_common(preset, true);

  auto* val = app.add_subcommand("validate", "Check a scenario against its declared bounds");
  val->add_option("scenario", target, "Scenario JSON file")->required();
  val->add_option("--set", c.sets, "Override PATH=VALUE (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kIo;
  }

  try {
    if (*run) return cmd_run(target, c);
    if (*sweep) return cmd_sweep(target, c);
    if (*preset) return cmd_preset(target, c);
    if (*val) return cmd_validate(target, c);
  } catch (const DivergenceError& e) {
    spdlog::error("{}", e.what());
    return kDiverged;
  } catch (const ValidationFailed& e) {
    spdlog::error("scenario violates its bounds (use --force to run anyway):");
    log_violations(e.violations());
    return kInvalid;
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const CapExceeded& e) {
    spdlog::error("{}", e.what());
    return kCap;
  } catch (const ScenarioError& e) {
    spdlog::error("{}", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kInvalid;
  }
  return kOk;
}
