#pragma once

// A complete closed-loop experiment: plant, bounds, signals, controllers and
// integration settings, loaded from a JSON document.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "extrudesim/control.hpp"
#include "extrudesim/plant.hpp"

namespace extrude {

/// File missing or unreadable/unwritable.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed JSON text; the message carries the line and column.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed JSON that does not describe a valid scenario or sweep.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  double horizon_s = 90.0;
  double step_s = 1e-3;
  int record_every = 1;
  double steady_state_window_s = 10.0;
  double sliding_band_delta = 1e-3;

  /// Throws ScenarioError when an invariant is broken.
  void validate() const;
  [[nodiscard]] std::size_t step_count() const;
};

struct InitialState {
  double x1 = 0.0;
  double x2 = 0.0;
};

struct Controllers {
  NozzleControllerConfig nozzle;
  StrandDesign strand;
  K1ConditionForm k1_condition_form = K1ConditionForm::product;
};

struct Scenario {
  std::string name = "scenario";
  PlantParams plant;  // design (nominal) plant
  /// Plant actually integrated; the design plant when empty.
  std::optional<PlantParams> true_plant;
  BoundsSpec bounds;
  ReferenceSignal x1r;
  ReferenceSignal x2r;
  DisturbanceProfile eta1;
  DisturbanceProfile eta2;
  SimConfig sim;
  InitialState initial;
  Controllers controllers;
  /// When present and true_plant is empty, simulate() draws the true plant.
  std::optional<UncertaintySampler> uncertainty;

  [[nodiscard]] const PlantParams& simulated_plant() const {
    return true_plant ? *true_plant : plant;
  }
  [[nodiscard]] double min_gain_k1() const;
  [[nodiscard]] double min_gain_k22() const;
};

/// Parses JSON text; throws ParseError with line/column on syntax errors.
[[nodiscard]] nlohmann::json parse_json_text(std::string_view text, std::string_view origin);
/// Reads and parses a file; throws IoError or ParseError.
[[nodiscard]] nlohmann::json read_json_file(const std::filesystem::path& path);

/// Throws ScenarioError on missing keys, wrong types, unknown keys or invalid values.
[[nodiscard]] Scenario scenario_from_json(const nlohmann::json& doc);
[[nodiscard]] Scenario load_scenario(const std::filesystem::path& path);

[[nodiscard]] nlohmann::json plant_to_json(const PlantParams& p);
[[nodiscard]] UncertaintySampler sampler_from_json(const nlohmann::json& doc);

/// Sets a value addressed by a dot path ("controllers.nozzle.k1"); numeric
/// segments index arrays. Missing object keys along the path are created.
void set_json_path(nlohmann::json& doc, std::string_view path, nlohmann::json value);
[[nodiscard]] const nlohmann::json* find_json_path(const nlohmann::json& doc,
                                                   std::string_view path);

/// Applies "path=value" (value parsed as JSON, falling back to a string).
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Bound violations of the scenario's signals on a grid 10x finer than the
/// simulation step (plus plant/bounds invariant breaches).
[[nodiscard]] std::vector<Violation> validate(const Scenario& scenario);

}  // namespace extrude
