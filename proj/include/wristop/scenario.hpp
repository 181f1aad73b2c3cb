#pragma once

// Scenario files (JSON) and the three built-in arenas.
//
//   {"format": "wristop-scenario/1", "kind": "slalom",
//    "arena": {"x_min": 0, "y_min": 0, "x_max": 3.3, "y_max": 9.0},
//    "walls": [[x1, y1, x2, y2], ...],
//    "pins": [{"x": 1.65, "y": 1.125, "radius": 0.05}, ...],
//    "start": {"x": 1.65, "y": 0.45, "theta": 1.5708},
//    "goal": {"type": "line", "a": [0, 8.6], "b": [3.3, 8.6]}
//          | {"type": "all_pins"}
//          | {"type": "waypoints", "points": [[x, y], ...], "tolerance": 0.5},
//    "scoring": "pin_penalty" | "travel_only",
//    "robot": {"footprint_radius": 0.35, "wheel_radius": 0.1, "wheel_separation": 0.4},
//    "autopilot_route": [[x, y], ...]}
//
// Only format, kind, arena, start and goal are required.
//
// The built-in geometry is fixture data: the 3.3 x 9.0 m slalom field with
// seven pins on its centreline at 1.125 m spacing, seven targets on a 2 m
// ring, and a corridor with two rooms for the building run.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wristop/errors.hpp"
#include "wristop/robot_sim.hpp"

namespace wristop {

inline constexpr const char* kScenarioFormat = "wristop-scenario/1";

struct Scenario {
  std::string name;
  World world;
  /// Waypoints the scripted autopilot steers through; empty means "derive from the goal".
  std::vector<Vec2> autopilot_route;
};

namespace detail {

class ScenarioReader {
 public:
  explicit ScenarioReader(std::string source) : source_(std::move(source)) {}

  ParseError error(const std::string& field, const std::string& what) const {
    return ParseError(source_, 0, field, what);
  }

  double number(const nlohmann::json& obj, const char* key, const std::string& path) const {
    const auto it = obj.find(key);
    const std::string field = path.empty() ? key : path + "." + key;
    if (it == obj.end()) throw error(field, "missing field");
    if (!it->is_number()) throw error(field, "expected a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw error(field, "value is not finite");
    return v;
  }

  const nlohmann::json& object(const nlohmann::json& obj, const char* key) const {
    const auto it = obj.find(key);
    if (it == obj.end()) throw error(key, "missing field");
    if (!it->is_object()) throw error(key, "expected an object");
    return *it;
  }

  Vec2 point(const nlohmann::json& v, const std::string& field) const {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw error(field, "expected [x, y]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  std::vector<Vec2> points(const nlohmann::json& v, const std::string& field) const {
    if (!v.is_array()) throw error(field, "expected an array of [x, y]");
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(point(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

 private:
  std::string source_;
};

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& doc, const std::string& source = {}) {
  const detail::ScenarioReader rd(source);
  if (!doc.is_object()) throw rd.error("", "scenario must be a JSON object");
  if (doc.value("format", std::string{}) != kScenarioFormat) {
    throw rd.error("format", std::string("expected '") + kScenarioFormat + "'");
  }
  if (!doc.contains("kind") || !doc["kind"].is_string()) throw rd.error("kind", "missing field");
  const auto kind = scenario_kind_from_string(doc["kind"].get<std::string>());
  if (!kind) throw rd.error("kind", "expected slalom, targets or building");

  Scenario sc;
  sc.name = doc.value("name", std::string(to_string(*kind)));
  World& w = sc.world;
  w.kind = *kind;
  w.scoring = default_scoring(*kind);

  const auto& arena = rd.object(doc, "arena");
  w.bounds = {rd.number(arena, "x_min", "arena"), rd.number(arena, "y_min", "arena"),
              rd.number(arena, "x_max", "arena"), rd.number(arena, "y_max", "arena")};
  if (!(w.bounds.x_max > w.bounds.x_min && w.bounds.y_max > w.bounds.y_min)) {
    throw rd.error("arena", "bounds must have positive extent");
  }

  if (doc.contains("robot")) {
    const auto& robot = rd.object(doc, "robot");
    if (robot.contains("footprint_radius")) w.footprint_radius = rd.number(robot, "footprint_radius", "robot");
    if (robot.contains("wheel_radius")) w.wheels.radius = rd.number(robot, "wheel_radius", "robot");
    if (robot.contains("wheel_separation")) w.wheels.separation = rd.number(robot, "wheel_separation", "robot");
    if (!(w.footprint_radius > 0.0 && w.wheels.radius > 0.0 && w.wheels.separation > 0.0)) {
      throw rd.error("robot", "dimensions must be positive");
    }
  }

  if (doc.contains("walls")) {
    const auto& walls = doc["walls"];
    if (!walls.is_array()) throw rd.error("walls", "expected an array");
    for (std::size_t i = 0; i < walls.size(); ++i) {
      const auto& s = walls[i];
      if (!s.is_array() || s.size() != 4 || !std::all_of(s.begin(), s.end(), [](const auto& v) { return v.is_number(); })) {
        throw rd.error("walls[" + std::to_string(i) + "]", "expected [x1, y1, x2, y2]");
      }
      w.walls.push_back({{s[0].get<double>(), s[1].get<double>()}, {s[2].get<double>(), s[3].get<double>()}});
    }
  }

  if (doc.contains("pins")) {
    const auto& pins = doc["pins"];
    if (!pins.is_array()) throw rd.error("pins", "expected an array");
    for (std::size_t i = 0; i < pins.size(); ++i) {
      const std::string path = "pins[" + std::to_string(i) + "]";
      if (!pins[i].is_object()) throw rd.error(path, "expected an object");
      Pin pin;
      pin.position = {rd.number(pins[i], "x", path), rd.number(pins[i], "y", path)};
      if (pins[i].contains("radius")) pin.radius = rd.number(pins[i], "radius", path);
      if (!(pin.radius > 0.0)) throw rd.error(path + ".radius", "must be positive");
      w.pins.push_back(pin);
    }
  }

  const auto& start = rd.object(doc, "start");
  w.pose = {rd.number(start, "x", "start"), rd.number(start, "y", "start"),
            normalize_heading(start.contains("theta") ? rd.number(start, "theta", "start") : 0.0)};
  if (w.pose.x < w.bounds.x_min || w.pose.x > w.bounds.x_max || w.pose.y < w.bounds.y_min ||
      w.pose.y > w.bounds.y_max) {
    throw rd.error("start", "start pose lies outside the arena");
  }

  const auto& goal = rd.object(doc, "goal");
  const std::string type = goal.value("type", std::string{});
  if (type == "line") {
    if (!goal.contains("a") || !goal.contains("b")) throw rd.error("goal", "line goal needs a and b");
    w.goal = GoalLine{rd.point(goal["a"], "goal.a"), rd.point(goal["b"], "goal.b")};
  } else if (type == "all_pins") {
    if (w.pins.empty()) throw rd.error("goal", "all_pins goal needs at least one pin");
    w.goal = GoalAllPins{};
  } else if (type == "waypoints") {
    if (!goal.contains("points")) throw rd.error("goal.points", "missing field");
    GoalWaypoints wp{rd.points(goal["points"], "goal.points"), 0.5};
    if (wp.points.empty()) throw rd.error("goal.points", "needs at least one waypoint");
    if (goal.contains("tolerance")) wp.tolerance = rd.number(goal, "tolerance", "goal");
    if (!(wp.tolerance > 0.0)) throw rd.error("goal.tolerance", "must be positive");
    w.goal = std::move(wp);
  } else {
    throw rd.error("goal.type", "expected line, all_pins or waypoints");
  }

  if (doc.contains("scoring")) {
    const auto& s = doc["scoring"];
    if (s == "pin_penalty") w.scoring = ScoringMode::PinPenalty;
    else if (s == "travel_only") w.scoring = ScoringMode::TravelOnly;
    else throw rd.error("scoring", "expected pin_penalty or travel_only");
  }
  if (doc.contains("autopilot_route")) sc.autopilot_route = rd.points(doc["autopilot_route"], "autopilot_route");

  reset_progress(w);
  return sc;
}

inline Scenario load_scenario(std::string_view text, const std::string& source = {}) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, detail::line_of_offset(text, e.byte), "", e.what());
  }
  return scenario_from_json(doc, source);
}

namespace builtin {

inline nlohmann::json slalom() {
  nlohmann::json doc = {{"format", kScenarioFormat}, {"kind", "slalom"}, {"name", "slalom"}};
  doc["arena"] = {{"x_min", 0.0}, {"y_min", 0.0}, {"x_max", 3.3}, {"y_max", 9.0}};
  const double centre = 1.65;
  doc["pins"] = nlohmann::json::array();
  for (int k = 1; k <= 7; ++k) doc["pins"].push_back({{"x", centre}, {"y", 1.125 * k}, {"radius", 0.05}});
  doc["start"] = {{"x", centre}, {"y", 0.45}, {"theta", std::numbers::pi / 2}};
  doc["goal"] = {{"type", "line"}, {"a", {0.0, 8.6}}, {"b", {3.3, 8.6}}};
  doc["scoring"] = "pin_penalty";
  // Weave: pass odd pins on the left, even pins on the right. Two points per
  // pin keep the robot level with it while passing instead of cutting across.
  auto route = nlohmann::json::array();
  for (int k = 1; k <= 7; ++k) {
    const double x = k % 2 == 1 ? centre - 0.95 : centre + 0.95;
    route.push_back({x, 1.125 * k - 0.3});
    route.push_back({x, 1.125 * k + 0.3});
  }
  route.push_back({centre, 8.85});  // past the line; passed only after crossing it
  doc["autopilot_route"] = route;
  return doc;
}

inline nlohmann::json targets() {
  nlohmann::json doc = {{"format", kScenarioFormat}, {"kind", "targets"}, {"name", "targets"}};
  doc["arena"] = {{"x_min", 0.0}, {"y_min", 0.0}, {"x_max", 6.0}, {"y_max", 6.0}};
  doc["pins"] = nlohmann::json::array();
  for (int k = 0; k < 7; ++k) {
    const double a = std::numbers::pi / 2 + 2.0 * std::numbers::pi * k / 7.0;
    doc["pins"].push_back({{"x", 3.0 + 2.0 * std::cos(a)}, {"y", 3.0 + 2.0 * std::sin(a)}, {"radius", 0.05}});
  }
  doc["start"] = {{"x", 3.0}, {"y", 3.0}, {"theta", std::numbers::pi / 2}};
  doc["goal"] = {{"type", "all_pins"}};
  doc["scoring"] = "travel_only";
  return doc;
}

inline nlohmann::json building() {
  nlohmann::json doc = {{"format", kScenarioFormat}, {"kind", "building"}, {"name", "building"}};
  doc["arena"] = {{"x_min", 0.0}, {"y_min", 0.0}, {"x_max", 12.0}, {"y_max", 8.0}};
  // Corridor along y in [0, 2]; room A (x < 6) and room B (x > 6) above it,
  // each entered through a 1.2 m door.
  doc["walls"] = {{0.0, 2.0, 2.0, 2.0}, {3.2, 2.0, 8.0, 2.0}, {9.2, 2.0, 12.0, 2.0}, {6.0, 2.0, 6.0, 8.0}};
  doc["start"] = {{"x", 1.0}, {"y", 1.0}, {"theta", 0.0}};
  doc["goal"] = {{"type", "waypoints"}, {"points", {{3.0, 5.0}, {9.0, 5.0}, {11.0, 1.0}}}, {"tolerance", 0.5}};
  doc["scoring"] = "travel_only";
  doc["autopilot_route"] = {{2.6, 1.0}, {2.6, 3.0}, {3.0, 5.0}, {2.6, 3.0}, {2.6, 1.0}, {8.6, 1.0},
                            {8.6, 3.0}, {9.0, 5.0}, {8.6, 3.0}, {8.6, 1.0}, {11.0, 1.0}};
  return doc;
}

}  // namespace builtin

inline Scenario builtin_scenario(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Slalom: return scenario_from_json(builtin::slalom(), "builtin:slalom");
    case ScenarioKind::Targets: return scenario_from_json(builtin::targets(), "builtin:targets");
    case ScenarioKind::Building: return scenario_from_json(builtin::building(), "builtin:building");
  }
  throw ArgumentError("unknown scenario kind");
}

inline nlohmann::json builtin_scenario_json(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Slalom: return builtin::slalom();
    case ScenarioKind::Targets: return builtin::targets();
    case ScenarioKind::Building: return builtin::building();
  }
  throw ArgumentError("unknown scenario kind");
}

/// A built-in name (slalom, targets, building) or a path to a scenario file.
inline Scenario resolve_scenario(const std::string& name_or_path) {
  if (const auto kind = scenario_kind_from_string(name_or_path)) return builtin_scenario(*kind);
  std::ifstream in(name_or_path);
  if (!in) throw DataError("unknown scenario '" + name_or_path + "' (not a built-in name or readable file)");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_scenario(buffer.str(), name_or_path);
}

/// Route the autopilot follows when the scenario does not name one.
inline std::vector<Vec2> effective_route(const Scenario& sc) {
  if (!sc.autopilot_route.empty()) return sc.autopilot_route;
  const World& w = sc.world;
  if (const auto* wp = std::get_if<GoalWaypoints>(&w.goal)) return wp->points;
  if (std::holds_alternative<GoalAllPins>(w.goal)) {
    std::vector<Vec2> route;
    for (const auto& p : w.pins) route.push_back(p.position);
    return route;
  }
  const auto& line = std::get<GoalLine>(w.goal);
  return {{(line.a.x + line.b.x) / 2.0, (line.a.y + line.b.y) / 2.0}};
}

}  // namespace wristop
