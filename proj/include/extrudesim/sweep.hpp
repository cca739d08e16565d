#pragma once

// Parameter grids over scenario fields, optional Monte-Carlo over sampled
// plants, and the gridded surfaces assembled from the results.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "extrudesim/scenario.hpp"
#include "extrudesim/sim.hpp"

namespace extrude {

struct SweepAxis {
  std::string path;            // dot path into the scenario JSON
  std::vector<double> values;  // as listed in the sweep file
  /// "min_gain_k1" or "min_gain_k22": written value = value * that gain of the base scenario.
  std::optional<std::string> scale_by;
};

struct MonteCarlo {
  UncertaintySampler sampler;
  std::size_t n = 1;
};

struct SweepGrid {
  std::string name = "sweep";
  nlohmann::json base;  // scenario document
  std::vector<SweepAxis> axes;
  std::optional<MonteCarlo> monte_carlo;
  std::size_t max_runs = 10000;
  std::vector<std::string> surface_metrics;
  std::optional<std::filesystem::path> output_dir;

  [[nodiscard]] std::size_t point_count() const;
  [[nodiscard]] std::size_t run_count() const;
};

/// Relative paths inside the document resolve against base_dir.
[[nodiscard]] SweepGrid sweep_from_json(const nlohmann::json& doc,
                                        const std::filesystem::path& base_dir);
[[nodiscard]] SweepGrid load_sweep(const std::filesystem::path& path);

/// Evenly spaced values, linear or logarithmic; count >= 1.
[[nodiscard]] std::vector<double> linspace(double from, double to, std::size_t count);
[[nodiscard]] std::vector<double> logspace(double from, double to, std::size_t count);

class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RunStatus { ok, diverged, invalid, error };
[[nodiscard]] const char* status_name(RunStatus s);

struct SweepRow {
  std::size_t point = 0;             // row-major grid index
  std::size_t sample = 0;            // Monte-Carlo sample index (0 without MC)
  std::vector<double> axis_values;   // values written into the scenario
  RunStatus status = RunStatus::ok;
  std::string message;
  PlantParams simulated_plant;
  Metrics metrics;
};

struct SweepResult {
  std::string name;
  std::vector<SweepAxis> axes;
  std::vector<std::vector<double>> applied_values;  // per axis, after scale_by
  std::size_t samples = 1;
  std::vector<SweepRow> rows;  // row-major over axes, sample index last

  [[nodiscard]] std::size_t count(RunStatus s) const;
};

/// One scenario per grid point, fully parsed; throws ScenarioError on the
/// first point that does not describe a valid scenario. Throws CapExceeded
/// when the run count exceeds grid.max_runs.
struct SweepPlan {
  std::vector<std::vector<double>> applied_values;
  std::vector<Scenario> points;
  std::vector<std::vector<double>> point_values;
  std::vector<std::vector<PlantParams>> samples;  // per point, empty without MC
};
[[nodiscard]] SweepPlan plan_sweep(const SweepGrid& grid);

/// Runs every grid point on up to `jobs` OpenMP threads. Per-point failures
/// are recorded in the row status; rows do not depend on `jobs`.
[[nodiscard]] SweepResult run_sweep(const SweepGrid& grid, int jobs);
/// Same results on the calling thread; kept as the reference for run_sweep.
[[nodiscard]] SweepResult run_sweep_serial(const SweepGrid& grid);

/// Names accepted by metric_value / error_surface.
[[nodiscard]] const std::vector<std::string>& metric_names();
/// Throws std::invalid_argument for an unknown name. Absent reach times are NaN.
[[nodiscard]] double metric_value(const Metrics& m, const std::string& name);

struct Surface {
  std::string metric;
  std::string row_path;
  std::string col_path;
  std::vector<double> row_headers;
  std::vector<double> col_headers;
  std::vector<std::vector<double>> mean;  // NaN where no run succeeded
  std::vector<std::vector<double>> stddev;  // sample std over successful MC runs (0 for one run)
};

/// Throws std::invalid_argument for an unknown metric or a sweep without exactly two axes.
[[nodiscard]] Surface error_surface(const SweepResult& result, const std::string& metric);

void write_results_csv(const std::filesystem::path& path, const SweepResult& result);
/// Wide format; the std table goes to a sibling file with a _std suffix.
void write_surface_csv(const std::filesystem::path& path, const Surface& surface);
[[nodiscard]] nlohmann::json summary_json(const SweepResult& result);

/// results.csv, summary.json and one surface_<metric>.csv per requested
/// metric (two-axis sweeps only).
void write_sweep_outputs(const std::filesystem::path& dir, const SweepResult& result,
                         const std::vector<std::string>& surface_metrics);

/// One SVG per metric: a heatmap of the surface for two-axis sweeps, the
/// Monte-Carlo mean against the axis for one-axis sweeps.
void write_sweep_plots(const std::filesystem::path& dir, const SweepResult& result,
                       const std::vector<std::string>& metrics);

}  // namespace extrude
