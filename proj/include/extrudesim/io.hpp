#pragma once

// CSV and JSON export of runs.

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "extrudesim/scenario.hpp"
#include "extrudesim/sim.hpp"

namespace extrude {

/// %.17g-style text (round-trips exactly) with a '.' decimal
/// separator whatever the locale.
[[nodiscard]] std::string format_double(double v);

inline constexpr const char* kTrajectoryHeader =
    "t,x1,x1r,x2,x2r,u1,u2,u_cancel,u_sm,u_opt,eta1,eta2,s,W1,W2";

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

[[nodiscard]] nlohmann::json metrics_to_json(const Metrics& m);
[[nodiscard]] nlohmann::json violation_to_json(const Violation& v);
/// Metrics plus scenario metadata, Riccati solution and gain certificates.
[[nodiscard]] nlohmann::json run_report_json(const Scenario& scenario, const SimResult& result);

/// Writes text to a file, throwing IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

/// trajectory.csv (decimated by sim.record_every) and metrics.json; with
/// `plot`, also tracking.svg and control.svg.
void write_run_outputs(const std::filesystem::path& dir, const Scenario& scenario,
                       const SimResult& result, bool plot);

}  // namespace extrude
