#pragma once

#include <json.hpp>

// A small, valid scenario: constant references, no disturbances, 5 s horizon.
inline nlohmann::json small_scenario() {
  return nlohmann::json::parse(R"({
    "name": "small",
    "plant": {"a1": -1.0, "b1": 1.0, "a2": -1.0, "a21": 0.5, "b2": 1.0},
    "bounds": {"eta1_bar": 1.0, "eta2_bar": 1.0, "x1r_bar": 1.0, "x1rd_bar": 0.0,
               "x2r_bar": 1.0, "x2rd_bar": 0.0},
    "references": {"x1r": {"kind": "constant", "value": 1.0},
                   "x2r": {"kind": "constant", "value": 1.0}},
    "disturbances": {"eta1": {"kind": "zero"}, "eta2": {"kind": "zero"}},
    "horizon_s": 5.0,
    "step_s": 0.001,
    "sim": {"steady_state_window_s": 1.0},
    "controllers": {
      "nozzle": {"k1": 3.0, "switching": "boundary-layer", "epsilon": 0.2},
      "strand": {"k22": 2.0, "q": 1.0, "r": 1.0, "switching": "boundary-layer", "epsilon": 0.2}
    }
  })");
}
