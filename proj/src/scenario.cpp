#include "extrudesim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace extrude {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& ctx, const std::string& what) {
  throw ScenarioError(ctx + ": " + what);
}

void check_keys(const json& obj, const std::string& ctx, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(ctx, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) fail(ctx, "unknown key '" + key + "'");
  }
}

const json& member(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ctx, std::string("missing key '") + key + "'");
  return *it;
}

double number(const json& obj, const char* key, const std::string& ctx) {
  const json& v = member(obj, key, ctx);
  if (!v.is_number()) fail(ctx + "." + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(ctx + "." + key, "expected a finite number");
  return d;
}

double number_or(const json& obj, const char* key, double fallback, const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  return number(obj, key, ctx);
}

bool boolean_or(const json& obj, const char* key, bool fallback, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) fail(ctx + "." + key, "expected true or false");
  return it->get<bool>();
}

std::string string_or(const json& obj, const char* key, const std::string& fallback,
                      const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_string()) fail(ctx + "." + key, "expected a string");
  return it->get<std::string>();
}

std::vector<double> number_array(const json& obj, const char* key, const std::string& ctx) {
  const json& v = member(obj, key, ctx);
  if (!v.is_array()) fail(ctx + "." + key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(ctx + "." + key, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

// Wraps constructor-level std::invalid_argument into a ScenarioError with context.
template <class F>
auto with_context(const std::string& ctx, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    fail(ctx, e.what());
  }
}

PlantParams plant_from_json(const json& j, const std::string& ctx) {
  check_keys(j, ctx, {"a1", "b1", "a2", "a21", "b2"});
  PlantParams p{number(j, "a1", ctx), number(j, "b1", ctx), number(j, "a2", ctx),
                number(j, "a21", ctx), number(j, "b2", ctx)};
  with_context(ctx, [&] { p.validate(); });
  return p;
}

BoundsSpec bounds_from_json(const json& j) {
  const std::string ctx = "bounds";
  check_keys(j, ctx, {"eta1_bar", "eta2_bar", "x1r_bar", "x1rd_bar", "x2r_bar", "x2rd_bar"});
  BoundsSpec b{number(j, "eta1_bar", ctx), number(j, "eta2_bar", ctx), number(j, "x1r_bar", ctx),
               number(j, "x1rd_bar", ctx), number(j, "x2r_bar", ctx), number(j, "x2rd_bar", ctx)};
  with_context(ctx, [&] { b.validate(); });
  return b;
}

ReferenceSignal reference_from_json(const json& j, const std::string& ctx) {
  if (!j.is_object()) fail(ctx, "expected an object");
  const std::string kind = string_or(j, "kind", "", ctx);
  std::optional<DeclaredBounds> declared;
  if (j.contains("declared_bounds")) {
    auto pair = number_array(j, "declared_bounds", ctx);
    if (pair.size() != 2) fail(ctx + ".declared_bounds", "expected [magnitude, derivative]");
    declared = DeclaredBounds{pair[0], pair[1]};
  }
  return with_context(ctx, [&]() -> ReferenceSignal {
    if (kind == "constant") {
      check_keys(j, ctx, {"kind", "value", "declared_bounds"});
      return ReferenceSignal(ReferenceSignal::Constant{number(j, "value", ctx)}, declared);
    }
    if (kind == "ramp-to-hold") {
      check_keys(j, ctx, {"kind", "start", "slope", "hold_time", "declared_bounds"});
      return ReferenceSignal(ReferenceSignal::RampToHold{number_or(j, "start", 0.0, ctx),
                                                         number(j, "slope", ctx),
                                                         number(j, "hold_time", ctx)},
                             declared);
    }
    if (kind == "piecewise-linear") {
      check_keys(j, ctx, {"kind", "points", "declared_bounds"});
      const json& pts = member(j, "points", ctx);
      if (!pts.is_array()) fail(ctx + ".points", "expected [[t, value], ...]");
      std::vector<std::pair<double, double>> knots;
      for (const auto& p : pts) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
          fail(ctx + ".points", "expected [[t, value], ...]");
        knots.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
      return ReferenceSignal(ReferenceSignal::PiecewiseLinear{std::move(knots)}, declared);
    }
    if (kind == "sinusoid") {
      check_keys(j, ctx, {"kind", "amplitude", "omega", "offset", "phase", "declared_bounds"});
      return ReferenceSignal(
          ReferenceSignal::Sinusoid{number(j, "amplitude", ctx), number(j, "omega", ctx),
                                    number_or(j, "offset", 0.0, ctx),
                                    number_or(j, "phase", 0.0, ctx)},
          declared);
    }
    fail(ctx + ".kind",
         "expected one of constant, ramp-to-hold, piecewise-linear, sinusoid (got '" + kind + "')");
  });
}

DisturbanceProfile disturbance_from_json(const json& j, const std::string& ctx) {
  if (!j.is_object()) fail(ctx, "expected an object");
  const std::string kind = string_or(j, "kind", "", ctx);
  return with_context(ctx, [&]() -> DisturbanceProfile {
    if (kind == "zero") {
      check_keys(j, ctx, {"kind"});
      return DisturbanceProfile::zero();
    }
    if (kind == "quadratic-pulse") {
      check_keys(j, ctx, {"kind", "amplitude", "t_start", "t_end"});
      return DisturbanceProfile::quadratic_pulse(number(j, "amplitude", ctx),
                                                 number(j, "t_start", ctx),
                                                 number(j, "t_end", ctx));
    }
    if (kind == "constant") {
      check_keys(j, ctx, {"kind", "value"});
      return DisturbanceProfile::constant(number(j, "value", ctx));
    }
    if (kind == "custom-samples") {
      check_keys(j, ctx, {"kind", "times", "values"});
      return DisturbanceProfile::custom_samples(number_array(j, "times", ctx),
                                                number_array(j, "values", ctx));
    }
    fail(ctx + ".kind",
         "expected one of zero, quadratic-pulse, constant, custom-samples (got '" + kind + "')");
  });
}

Switching switching_from_json(const json& j, const std::string& ctx) {
  const std::string kind = string_or(j, "switching", "signum", ctx);
  if (kind == "signum") return Switching::signum();
  if (kind == "boundary-layer") {
    const double eps = number(j, "epsilon", ctx);
    return with_context(ctx, [&] { return Switching::boundary_layer(eps); });
  }
  fail(ctx + ".switching", "expected signum or boundary-layer (got '" + kind + "')");
}

std::optional<K1ConditionForm> k1_form_from_json(const json& j, const std::string& ctx) {
  if (!j.contains("k1_condition_form")) return std::nullopt;
  const std::string form = string_or(j, "k1_condition_form", "product", ctx);
  if (form == "product") return K1ConditionForm::product;
  if (form == "paper-literal") return K1ConditionForm::paper_literal;
  fail(ctx + ".k1_condition_form", "expected product or paper-literal");
}

Controllers controllers_from_json(const json& j) {
  const std::string ctx = "controllers";
  check_keys(j, ctx, {"nozzle", "strand"});
  Controllers c;

  const std::string nctx = ctx + ".nozzle";
  const json& n = member(j, "nozzle", ctx);
  check_keys(n, nctx, {"k1", "switching", "epsilon", "u1_limit", "k1_condition_form"});
  c.nozzle.k1 = number(n, "k1", nctx);
  c.nozzle.switching = switching_from_json(n, nctx);
  if (n.contains("u1_limit") && !n["u1_limit"].is_null())
    c.nozzle.u1_limit = number(n, "u1_limit", nctx);
  with_context(nctx, [&] { c.nozzle.validate(); });

  const std::string sctx = ctx + ".strand";
  const json& s = member(j, "strand", ctx);
  check_keys(s, sctx,
             {"k22", "q", "r", "switching", "epsilon", "enable_sm", "enable_opt", "k21",
              "k1_condition_form", "opt_gain_scale"});
  c.strand.k22 = number(s, "k22", sctx);
  c.strand.q = number(s, "q", sctx);
  c.strand.r = number(s, "r", sctx);
  if (!(c.strand.k22 >= 0.0)) fail(sctx + ".k22", "must be >= 0");
  if (!(c.strand.q >= 0.0)) fail(sctx + ".q", "must be >= 0");
  if (!(c.strand.r > 0.0)) fail(sctx + ".r", "must be > 0");
  c.strand.switching = switching_from_json(s, sctx);
  c.strand.enable_sm = boolean_or(s, "enable_sm", true, sctx);
  c.strand.enable_opt = boolean_or(s, "enable_opt", true, sctx);
  c.strand.opt_gain_scale = number_or(s, "opt_gain_scale", 1.0, sctx);
  if (!(c.strand.opt_gain_scale >= 0.0)) fail(sctx + ".opt_gain_scale", "must be >= 0");
  if (s.contains("k21")) {
    const json& k = s["k21"];
    if (k.is_string()) {
      if (k.get<std::string>() != "auto") fail(sctx + ".k21", "expected \"auto\" or a number");
    } else if (k.is_number()) {
      c.strand.k21 = k.get<double>();
    } else {
      fail(sctx + ".k21", "expected \"auto\" or a number");
    }
  }

  // Accepted under either controller; the strand block wins when both set it.
  if (auto f = k1_form_from_json(n, nctx)) c.k1_condition_form = *f;
  if (auto f = k1_form_from_json(s, sctx)) c.k1_condition_form = *f;
  return c;
}

ParamDistribution distribution_from_json(const json& j, const std::string& ctx) {
  check_keys(j, ctx, {"kind", "fraction", "std"});
  const std::string kind = string_or(j, "kind", "none", ctx);
  if (kind == "none") return {};
  if (kind == "uniform") {
    const double f = number(j, "fraction", ctx);
    if (!(f >= 0.0)) fail(ctx + ".fraction", "must be >= 0");
    return {ParamDistribution::Kind::uniform, f};
  }
  if (kind == "gaussian") {
    const double s = number(j, "std", ctx);
    if (!(s >= 0.0)) fail(ctx + ".std", "must be >= 0");
    return {ParamDistribution::Kind::gaussian, s};
  }
  fail(ctx + ".kind", "expected none, uniform or gaussian");
}

}  // namespace

UncertaintySampler sampler_from_json(const json& j) {
  const std::string ctx = "uncertainty";
  check_keys(j, ctx, {"seed", "default", "params"});
  UncertaintySampler s;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0)
      fail(ctx + ".seed", "expected a nonnegative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  ParamDistribution def;
  if (j.contains("default")) def = distribution_from_json(j["default"], ctx + ".default");
  s.a1 = s.b1 = s.a2 = s.a21 = s.b2 = def;
  if (j.contains("params")) {
    const json& p = j["params"];
    const std::string pctx = ctx + ".params";
    check_keys(p, pctx, {"a1", "b1", "a2", "a21", "b2"});
    auto pick = [&](const char* key, ParamDistribution& dst) {
      if (p.contains(key)) dst = distribution_from_json(p[key], pctx + "." + key);
    };
    pick("a1", s.a1);
    pick("b1", s.b1);
    pick("a2", s.a2);
    pick("a21", s.a21);
    pick("b2", s.b2);
  }
  return s;
}

void SimConfig::validate() const {
  if (!(step_s > 0.0) || !std::isfinite(step_s)) throw ScenarioError("step_s must be > 0");
  if (!(horizon_s >= 10.0 * step_s) || !std::isfinite(horizon_s))
    throw ScenarioError("horizon_s must be at least 10 * step_s");
  if (record_every < 1) throw ScenarioError("sim.record_every must be >= 1");
  if (!(steady_state_window_s > 0.0 && steady_state_window_s < horizon_s))
    throw ScenarioError("sim.steady_state_window_s must lie in (0, horizon_s)");
  if (!(sliding_band_delta > 0.0)) throw ScenarioError("sim.sliding_band_delta must be > 0");
}

std::size_t SimConfig::step_count() const {
  return static_cast<std::size_t>(std::llround(horizon_s / step_s));
}

double Scenario::min_gain_k1() const {
  return extrude::min_gain_k1(plant, bounds, controllers.k1_condition_form);
}

double Scenario::min_gain_k22() const { return extrude::min_gain_k22(plant, bounds); }

json parse_json_text(std::string_view text, std::string_view origin) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(origin) + ": " + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path.string());
}

Scenario scenario_from_json(const json& doc) {
  check_keys(doc, "scenario",
             {"name", "description", "plant", "true_plant", "bounds", "references",
              "disturbances", "horizon_s", "step_s", "initial", "sim", "controllers",
              "uncertainty"});
  Scenario sc;
  sc.name = string_or(doc, "name", "scenario", "scenario");
  sc.plant = plant_from_json(member(doc, "plant", "scenario"), "plant");
  if (doc.contains("true_plant") && !doc["true_plant"].is_null())
    sc.true_plant = plant_from_json(doc["true_plant"], "true_plant");
  sc.bounds = bounds_from_json(member(doc, "bounds", "scenario"));

  const json& refs = member(doc, "references", "scenario");
  check_keys(refs, "references", {"x1r", "x2r"});
  sc.x1r = reference_from_json(member(refs, "x1r", "references"), "references.x1r");
  sc.x2r = reference_from_json(member(refs, "x2r", "references"), "references.x2r");

  const json& dist = member(doc, "disturbances", "scenario");
  check_keys(dist, "disturbances", {"eta1", "eta2"});
  sc.eta1 = disturbance_from_json(member(dist, "eta1", "disturbances"), "disturbances.eta1");
  sc.eta2 = disturbance_from_json(member(dist, "eta2", "disturbances"), "disturbances.eta2");

  sc.sim.horizon_s = number(doc, "horizon_s", "scenario");
  sc.sim.step_s = number(doc, "step_s", "scenario");
  if (doc.contains("sim")) {
    const json& s = doc["sim"];
    check_keys(s, "sim", {"record_every", "steady_state_window_s", "sliding_band_delta"});
    if (s.contains("record_every")) {
      if (!s["record_every"].is_number_integer()) fail("sim.record_every", "expected an integer");
      sc.sim.record_every = s["record_every"].get<int>();
    }
    sc.sim.steady_state_window_s =
        number_or(s, "steady_state_window_s", sc.sim.steady_state_window_s, "sim");
    sc.sim.sliding_band_delta =
        number_or(s, "sliding_band_delta", sc.sim.sliding_band_delta, "sim");
  }
  sc.sim.validate();

  if (doc.contains("initial")) {
    const json& i = doc["initial"];
    check_keys(i, "initial", {"x1", "x2"});
    sc.initial.x1 = number_or(i, "x1", 0.0, "initial");
    sc.initial.x2 = number_or(i, "x2", 0.0, "initial");
  }

  sc.controllers = controllers_from_json(member(doc, "controllers", "scenario"));
  // Fails early on weights the Riccati solve would reject.
  with_context("controllers.strand",
               [&] { (void)design_strand_controller(sc.plant, sc.controllers.strand); });

  if (doc.contains("uncertainty") && !doc["uncertainty"].is_null())
    sc.uncertainty = sampler_from_json(doc["uncertainty"]);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path));
}

json plant_to_json(const PlantParams& p) {
  return json{{"a1", p.a1}, {"b1", p.b1}, {"a2", p.a2}, {"a21", p.a21}, {"b2", p.b2}};
}

namespace {

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto dot = path.find('.', start);
    const auto end = dot == std::string_view::npos ? path.size() : dot;
    out.emplace_back(path.substr(start, end - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return out;
}

std::optional<std::size_t> as_index(const std::string& seg) {
  std::size_t idx = 0;
  auto [ptr, ec] = std::from_chars(seg.data(), seg.data() + seg.size(), idx);
  if (ec != std::errc{} || ptr != seg.data() + seg.size()) return std::nullopt;
  return idx;
}

}  // namespace

void set_json_path(json& doc, std::string_view path, json value) {
  const auto segs = split_path(path);
  json* node = &doc;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& seg = segs[i];
    if (seg.empty()) throw ScenarioError("invalid path '" + std::string(path) + "'");
    if (node->is_array()) {
      auto idx = as_index(seg);
      if (!idx || *idx >= node->size())
        throw ScenarioError("path '" + std::string(path) + "': bad array index '" + seg + "'");
      node = &(*node)[*idx];
    } else if (node->is_object() || node->is_null()) {
      node = &(*node)[seg];
    } else {
      throw ScenarioError("path '" + std::string(path) + "': '" + seg +
                          "' descends into a non-container");
    }
  }
  *node = std::move(value);
}

const json* find_json_path(const json& doc, std::string_view path) {
  const json* node = &doc;
  for (const auto& seg : split_path(path)) {
    if (node->is_array()) {
      auto idx = as_index(seg);
      if (!idx || *idx >= node->size()) return nullptr;
      node = &(*node)[*idx];
    } else if (node->is_object()) {
      auto it = node->find(seg);
      if (it == node->end()) return nullptr;
      node = &*it;
    } else {
      return nullptr;
    }
  }
  return node;
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ScenarioError("override '" + std::string(assignment) + "' is not PATH=VALUE");
  const auto path = assignment.substr(0, eq);
  const auto text = assignment.substr(eq + 1);
  json value = json::parse(text.begin(), text.end(), nullptr, false);
  if (value.is_discarded()) value = std::string(text);
  set_json_path(doc, path, std::move(value));
}

std::vector<Violation> validate(const Scenario& sc) {
  auto out = validate_scenario(sc.plant, sc.bounds, SignalSet{sc.x1r, sc.x2r, sc.eta1, sc.eta2},
                               sc.sim.horizon_s, sc.sim.step_s / 10.0);
  if (sc.true_plant) {
    if (auto err = sc.true_plant->invariant_error()) {
      Violation v;
      v.signal = "config";
      v.message = "true_plant: " + *err;
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace extrude
