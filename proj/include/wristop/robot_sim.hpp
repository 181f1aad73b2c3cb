#pragma once

// Differential-drive kinematics and the scenario world: wheel/body velocity
// conversion, exact constant-input unicycle integration, pin knockdown, wall
// contact and goal tracking, plus run scoring.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wristop/command.hpp"
#include "wristop/errors.hpp"

namespace wristop {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kPinPenaltySeconds = 5.0;

struct WheelParams {
  double radius{0.1};      // m
  double separation{0.4};  // m
};

struct BodyVelocity {
  double v{0.0};
  double omega{0.0};
};

struct WheelSpeeds {
  double right{0.0};  // rad/s
  double left{0.0};
};

inline BodyVelocity wheel_to_body(double omega_right, double omega_left, const WheelParams& p) {
  return {p.radius * (omega_right + omega_left) / 2.0, p.radius * (omega_right - omega_left) / p.separation};
}

inline WheelSpeeds body_to_wheel(double v, double omega, const WheelParams& p) {
  return {(2.0 * v + omega * p.separation) / (2.0 * p.radius),
          (2.0 * v - omega * p.separation) / (2.0 * p.radius)};
}

struct RobotPose {
  double x{0.0};
  double y{0.0};
  double theta{0.0};  // [0, 2pi)

  bool operator==(const RobotPose&) const = default;
};

inline double normalize_heading(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

/// Exact step of the unicycle model under constant (v, omega). The chord form
/// v*dt*sinc(omega*dt/2) avoids the cancellation of (v/omega)(sin - sin) at
/// small omega; sin(h)/h is accurate for any nonzero h, so only omega == 0
/// needs its own branch.
inline RobotPose integrate(const RobotPose& pose, const VelocityCommand& cmd, double dt) {
  if (!(dt > 0.0)) throw ArgumentError("integrate: dt must be positive");
  RobotPose out = pose;
  if (cmd.omega * dt == 0.0) {
    out.x += cmd.v * std::cos(pose.theta) * dt;
    out.y += cmd.v * std::sin(pose.theta) * dt;
  } else {
    const double half = cmd.omega * dt / 2.0;
    const double chord = cmd.v * dt * std::sin(half) / half;
    out.x += chord * std::cos(pose.theta + half);
    out.y += chord * std::sin(pose.theta + half);
  }
  out.theta = normalize_heading(pose.theta + cmd.omega * dt);
  return out;
}

struct Vec2 {
  double x{0.0};
  double y{0.0};
  bool operator==(const Vec2&) const = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Bounds {
  double x_min{0.0};
  double y_min{0.0};
  double x_max{0.0};
  double y_max{0.0};

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
};

struct Segment {
  Vec2 a;
  Vec2 b;
};

inline Vec2 closest_point(const Segment& s, Vec2 p) {
  const double dx = s.b.x - s.a.x;
  const double dy = s.b.y - s.a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return s.a;
  const double t = std::clamp(((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / len2, 0.0, 1.0);
  return {s.a.x + t * dx, s.a.y + t * dy};
}

struct Pin {
  Vec2 position;
  double radius{0.05};
  bool knocked{false};
};

enum class ScenarioKind { Slalom, Targets, Building };
enum class ScoringMode { PinPenalty, TravelOnly };

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Slalom: return "slalom";
    case ScenarioKind::Targets: return "targets";
    case ScenarioKind::Building: return "building";
  }
  return "?";
}

inline std::optional<ScenarioKind> scenario_kind_from_string(std::string_view name) {
  if (name == "slalom") return ScenarioKind::Slalom;
  if (name == "targets") return ScenarioKind::Targets;
  if (name == "building") return ScenarioKind::Building;
  return std::nullopt;
}

inline ScoringMode default_scoring(ScenarioKind k) {
  return k == ScenarioKind::Slalom ? ScoringMode::PinPenalty : ScoringMode::TravelOnly;
}

/// Reached once the robot centre crosses the segment to the side opposite the start.
struct GoalLine {
  Vec2 a;
  Vec2 b;
};
/// Reached when every pin is knocked down.
struct GoalAllPins {};
/// Reached after visiting every point in order (within `tolerance`).
struct GoalWaypoints {
  std::vector<Vec2> points;
  double tolerance{0.5};
};
using Goal = std::variant<GoalLine, GoalAllPins, GoalWaypoints>;

enum class SimEventKind { PinContact, GoalReached, WallContact };

inline std::string_view to_string(SimEventKind k) {
  switch (k) {
    case SimEventKind::PinContact: return "pin_contact";
    case SimEventKind::GoalReached: return "goal_reached";
    case SimEventKind::WallContact: return "wall_contact";
  }
  return "?";
}

struct SimEvent {
  SimEventKind kind{SimEventKind::GoalReached};
  double time{0.0};
  std::optional<std::size_t> pin;

  bool operator==(const SimEvent&) const = default;
};

struct World {
  ScenarioKind kind{ScenarioKind::Slalom};
  ScoringMode scoring{ScoringMode::PinPenalty};
  RobotPose pose;
  double footprint_radius{0.35};
  WheelParams wheels;
  Bounds bounds;
  std::vector<Pin> pins;
  std::vector<Segment> walls;
  Goal goal{GoalAllPins{}};
  double elapsed{0.0};
  std::vector<SimEvent> events;

  // Progress bookkeeping.
  bool goal_reached{false};
  std::size_t next_waypoint{0};
  double start_side{0.0};
  bool in_wall_contact{false};

  std::size_t standing_pins() const {
    return static_cast<std::size_t>(std::count_if(pins.begin(), pins.end(), [](const Pin& p) { return !p.knocked; }));
  }
};

namespace detail {

inline double side_of(const GoalLine& line, Vec2 p) {
  return (line.b.x - line.a.x) * (p.y - line.a.y) - (line.b.y - line.a.y) * (p.x - line.a.x);
}

/// Pushes the robot disc out of walls and arena edges; true if anything moved it.
inline bool resolve_contacts(World& world, Vec2 previous) {
  const double r = world.footprint_radius;
  Vec2 p{world.pose.x, world.pose.y};
  bool touched = false;
  for (int pass = 0; pass < 3; ++pass) {
    bool moved = false;
    for (const auto& wall : world.walls) {
      const Vec2 q = closest_point(wall, p);
      const double d = distance(p, q);
      if (d >= r) continue;
      Vec2 away{p.x - q.x, p.y - q.y};
      double len = d;
      if (len == 0.0) {
        away = {previous.x - q.x, previous.y - q.y};
        len = std::hypot(away.x, away.y);
        if (len == 0.0) continue;
      }
      p = {q.x + away.x / len * r, q.y + away.y / len * r};
      moved = true;
    }
    touched = touched || moved;
    if (!moved) break;
  }
  const Vec2 clamped{std::clamp(p.x, world.bounds.x_min + r, world.bounds.x_max - r),
                     std::clamp(p.y, world.bounds.y_min + r, world.bounds.y_max - r)};
  if (clamped != p) touched = true;
  world.pose.x = clamped.x;
  world.pose.y = clamped.y;
  return touched;
}

}  // namespace detail

/// Records the start side of a line goal. Call after placing the robot.
inline void reset_progress(World& world) {
  world.elapsed = 0.0;
  world.events.clear();
  world.goal_reached = false;
  world.next_waypoint = 0;
  world.in_wall_contact = false;
  for (auto& pin : world.pins) pin.knocked = false;
  if (const auto* line = std::get_if<GoalLine>(&world.goal)) {
    world.start_side = detail::side_of(*line, {world.pose.x, world.pose.y});
  }
}

/// Advances the world by dt under `cmd` and returns the events of this step
/// (also appended to world.events). Pins knock down on contact but never
/// obstruct; walls and the arena edge clamp the robot with an edge-triggered
/// WallContact.
inline std::vector<SimEvent> step_world(World& world, const VelocityCommand& cmd, double dt) {
  if (!(dt > 0.0)) throw ArgumentError("step_world: dt must be positive");
  std::vector<SimEvent> events;
  const Vec2 previous{world.pose.x, world.pose.y};
  world.pose = integrate(world.pose, cmd, dt);
  world.elapsed += dt;

  const bool contact = detail::resolve_contacts(world, previous);
  if (contact && !world.in_wall_contact) events.push_back({SimEventKind::WallContact, world.elapsed, {}});
  world.in_wall_contact = contact;

  const Vec2 centre{world.pose.x, world.pose.y};
  for (std::size_t i = 0; i < world.pins.size(); ++i) {
    Pin& pin = world.pins[i];
    if (pin.knocked) continue;
    if (distance(centre, pin.position) < world.footprint_radius + pin.radius) {
      pin.knocked = true;
      events.push_back({SimEventKind::PinContact, world.elapsed, i});
    }
  }

  if (!world.goal_reached) {
    bool reached = false;
    if (const auto* line = std::get_if<GoalLine>(&world.goal)) {
      const double dx = line->b.x - line->a.x;
      const double dy = line->b.y - line->a.y;
      const double len2 = dx * dx + dy * dy;
      const double t = len2 > 0.0 ? ((centre.x - line->a.x) * dx + (centre.y - line->a.y) * dy) / len2 : 0.0;
      const double side = detail::side_of(*line, centre);
      reached = t >= 0.0 && t <= 1.0 && (side == 0.0 || (side > 0.0) != (world.start_side > 0.0));
    } else if (std::holds_alternative<GoalAllPins>(world.goal)) {
      reached = !world.pins.empty() && world.standing_pins() == 0;
    } else if (const auto* wp = std::get_if<GoalWaypoints>(&world.goal)) {
      while (world.next_waypoint < wp->points.size() &&
             distance(centre, wp->points[world.next_waypoint]) <= wp->tolerance) {
        ++world.next_waypoint;
      }
      reached = world.next_waypoint == wp->points.size();
    }
    if (reached) {
      world.goal_reached = true;
      events.push_back({SimEventKind::GoalReached, world.elapsed, {}});
    }
  }

  world.events.insert(world.events.end(), events.begin(), events.end());
  return events;
}

struct RunScore {
  double travel_time{0.0};
  int pins_touched{0};
  double total_time{0.0};

  bool operator==(const RunScore&) const = default;
};

/// Pin-penalty scoring adds 5 s per touched pin; travel-only scoring reports
/// travel time as the total.
inline RunScore score_run(const std::vector<SimEvent>& events, ScoringMode mode, double travel_time) {
  if (!(travel_time >= 0.0)) throw ArgumentError("score_run: travel time must be >= 0");
  RunScore score;
  score.travel_time = travel_time;
  score.pins_touched = static_cast<int>(std::count_if(
      events.begin(), events.end(), [](const SimEvent& e) { return e.kind == SimEventKind::PinContact; }));
  score.total_time = mode == ScoringMode::PinPenalty
                         ? travel_time + kPinPenaltySeconds * score.pins_touched
                         : travel_time;
  return score;
}

}  // namespace wristop
