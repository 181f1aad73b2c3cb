#pragma once

// Per-tick telemetry snapshot (one JSON object) shared by the console feed
// and run logs.

#include <string>

#include <json.hpp>

#include "wristop/command.hpp"
#include "wristop/robot_sim.hpp"

namespace wristop {

inline nlohmann::ordered_json telemetry_snapshot(const World& world, const std::string& scenario,
                                                 OperationalMode mode, const VelocityCommand& cmd,
                                                 const SimEvent* last_event) {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  j["elapsed"] = world.elapsed;
  j["mode"] = std::string(to_string(mode));
  j["pose"] = {{"x", world.pose.x}, {"y", world.pose.y}, {"theta", world.pose.theta}};
  j["cmd"] = {{"v", cmd.v}, {"omega", cmd.omega}};
  const WheelSpeeds wheels = body_to_wheel(cmd.v, cmd.omega, world.wheels);
  j["wheels"] = {{"right", wheels.right}, {"left", wheels.left}};
  j["footprint_radius"] = world.footprint_radius;
  j["arena"] = {{"x_min", world.bounds.x_min}, {"y_min", world.bounds.y_min},
                {"x_max", world.bounds.x_max}, {"y_max", world.bounds.y_max}};
  auto& pins = j["pins"] = nlohmann::ordered_json::array();
  for (const auto& p : world.pins) {
    pins.push_back({{"x", p.position.x}, {"y", p.position.y}, {"radius", p.radius}, {"knocked", p.knocked}});
  }
  auto& walls = j["walls"] = nlohmann::ordered_json::array();
  for (const auto& w : world.walls) walls.push_back({w.a.x, w.a.y, w.b.x, w.b.y});
  j["goal_reached"] = world.goal_reached;
  if (last_event) {
    nlohmann::ordered_json ev = {{"kind", std::string(to_string(last_event->kind))}, {"time", last_event->time}};
    if (last_event->pin) ev["pin"] = *last_event->pin;
    j["last_event"] = ev;
  } else {
    j["last_event"] = nullptr;
  }
  return j;
}

}  // namespace wristop
