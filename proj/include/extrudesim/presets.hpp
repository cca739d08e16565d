#pragma once

// Bundled case-study scenarios and sweeps, and the trend assertions each one
// is expected to satisfy.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "extrudesim/scenario.hpp"
#include "extrudesim/sweep.hpp"

namespace extrude {

class UnknownPreset : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

[[nodiscard]] const std::vector<std::string>& preset_names();
[[nodiscard]] bool is_sweep_preset(const std::string& name);

/// The preset document; sweep presets have their base scenario inlined.
[[nodiscard]] nlohmann::json preset_document(const std::string& name);
[[nodiscard]] Scenario preset_scenario(const std::string& name);
[[nodiscard]] SweepGrid preset_sweep(const std::string& name);

struct Assertion {
  std::string id;
  std::string description;
  bool passed = false;
  nlohmann::json details = nlohmann::json::object();
};

struct PresetReport {
  std::string preset;
  std::uint64_t seed = 0;
  std::vector<Assertion> assertions;

  [[nodiscard]] bool all_passed() const;
  [[nodiscard]] nlohmann::json to_json() const;
};

struct PresetOptions {
  std::optional<std::filesystem::path> out_dir;  // nothing written when empty
  bool plot = false;
  int jobs = 1;
  std::uint64_t seed = 1;
};

/// Runs the preset, evaluates its assertions and, with an output directory,
/// writes the run or sweep outputs plus report.json. Throws UnknownPreset.
[[nodiscard]] PresetReport run_preset(const std::string& name, const PresetOptions& opts = {});

// The individual assertions, also used directly by the acceptance tests.

/// Randomized constant-reference nozzle scenarios with signum switching,
/// K1 = min_gain_k1 + 0.5/b1 and an eta1 pulse at 90% of its bound: after
/// |e1(0)|/alpha1 + 0.05 s the nozzle error stays within 2*b1*K1*dt.
[[nodiscard]] Assertion check_reaching_family(const nlohmann::json& base, std::uint64_t seed,
                                              std::size_t count = 20);
/// Post-disturbance nozzle error at the configured K1 is below the error
/// with K1 halfway between min_gain_k1 and the configured value.
[[nodiscard]] Assertion check_gain_margin(const nlohmann::json& base);
/// K1 sweep: post-disturbance error nonincreasing in K1, and at the largest
/// gain within 50% of the chatter band 2*b1*K1*dt.
[[nodiscard]] Assertion check_k1_trend(const SweepResult& sweep, const Scenario& base);
/// With eta2 = 0, the smoothed derivative of e2 follows (a2 - b2^2 P/r) e2
/// within 5% once the sliding surface is reached.
[[nodiscard]] Assertion check_sliding_motion(const nlohmann::json& base);
/// With the eta2 pulse active and K22 above min_gain_k22, |s| <= 2*delta
/// throughout the pulse.
[[nodiscard]] Assertion check_pulse_band(const nlohmann::json& base);
/// Regulation (a21 = 0, SM off, eta2 = 0, x2(0) = 1, x2r = 0, Q = R = 1): the
/// Riccati gain has no larger cost than 0.5x, 0.8x, 1.2x, 2x of it.
[[nodiscard]] Assertion check_lq_optimality(const nlohmann::json& base);
/// Q-R grid: ss_err2 decreasing in Q, control effort decreasing in R
/// (Spearman rho <= -0.9 per line) and ss_err2 < 5% in the largest-Q row.
[[nodiscard]] Assertion check_qr_surface(const SweepResult& sweep);
/// SM on vs off under the eta2 pulse: smaller post-disturbance e2 with SM,
/// at less than 10% extra control effort.
[[nodiscard]] Assertion check_sm_pairing(const nlohmann::json& base);

}  // namespace extrude
