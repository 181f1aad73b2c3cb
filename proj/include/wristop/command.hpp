#pragma once

// High-level controller: the Autonomous/Teleoperated mode machine toggled by
// the Circle gesture, the wrist-angle to body-velocity mapping, and the
// acknowledgement events that drive haptic feedback.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "wristop/errors.hpp"
#include "wristop/gesture.hpp"
#include "wristop/imu_core.hpp"

namespace wristop {

enum class OperationalMode : std::uint8_t { Autonomous = 0, Teleoperated = 1 };

inline std::string_view to_string(OperationalMode m) {
  return m == OperationalMode::Autonomous ? "Autonomous" : "Teleoperated";
}

inline constexpr double kDefaultMaxLinear = 0.7;   // m/s
inline constexpr double kDefaultMaxAngular = 1.0;  // rad/s

/// v = k_roll * roll, omega = k_pitch * pitch, with the gains chosen so that
/// a wrist at +-pi/2 commands the velocity limits.
struct GainConfig {
  double k_roll{kDefaultMaxLinear / kHalfPi};
  double k_pitch{kDefaultMaxAngular / kHalfPi};
  double v_max{kDefaultMaxLinear};
  double omega_max{kDefaultMaxAngular};

  bool operator==(const GainConfig&) const = default;
};

inline GainConfig make_gains(double v_max, double omega_max) {
  if (!(v_max > 0.0)) throw ArgumentError("make_gains: v_max must be positive");
  if (!(omega_max > 0.0)) throw ArgumentError("make_gains: omega_max must be positive");
  return {v_max / kHalfPi, omega_max / kHalfPi, v_max, omega_max};
}

struct VelocityCommand {
  double v{0.0};
  double omega{0.0};
  Micros timestamp_us{0};

  bool operator==(const VelocityCommand&) const = default;
};

struct ControllerState {
  OperationalMode mode{OperationalMode::Autonomous};
  GainConfig gains{};
  std::optional<Micros> last_fire_us;

  bool operator==(const ControllerState&) const = default;
};

struct VibrationAck {
  GestureClass gesture;
  bool operator==(const VibrationAck&) const = default;
};

struct ModeChanged {
  OperationalMode mode;
  bool operator==(const ModeChanged&) const = default;
};

using ControllerEvent = std::variant<VibrationAck, ModeChanged>;

struct ModeTransition {
  OperationalMode from;
  GestureClass gesture;
  OperationalMode to;
};

/// Gestures not listed here are acknowledged but leave the mode alone. New
/// behaviours (trajectory tracking, following) extend this table.
inline constexpr std::array<ModeTransition, 2> kModeTransitions = {{
    {OperationalMode::Autonomous, GestureClass::Circle, OperationalMode::Teleoperated},
    {OperationalMode::Teleoperated, GestureClass::Circle, OperationalMode::Autonomous},
}};

struct StepResult {
  ControllerState state;
  std::vector<ControllerEvent> events;
};

/// Every recognised gesture yields exactly one VibrationAck; a matching
/// transition then yields ModeChanged. Also records the fire time used for
/// refractory suppression.
inline StepResult step_mode(ControllerState state, const MatchDecision& decision) {
  StepResult result{state, {}};
  if (!decision.gesture) return result;

  const GestureClass g = *decision.gesture;
  result.state.last_fire_us = decision.timestamp_us;
  result.events.emplace_back(VibrationAck{g});
  for (const auto& t : kModeTransitions) {
    if (t.from == state.mode && t.gesture == g) {
      result.state.mode = t.to;
      result.events.emplace_back(ModeChanged{t.to});
      break;
    }
  }
  return result;
}

/// Roll drives linear velocity, pitch drives angular velocity; Autonomous
/// mode stops the robot. K*theta is evaluated as limit*theta/(pi/2) so the
/// limits are reached exactly at |theta| = pi/2.
inline VelocityCommand map_pose_to_velocity(const OrientationEstimate& est, const GainConfig& gains,
                                            OperationalMode mode) {
  VelocityCommand cmd;
  cmd.timestamp_us = est.timestamp_us;
  if (mode == OperationalMode::Autonomous) return cmd;
  const double roll = clamp_angle(est.roll);
  const double pitch = clamp_angle(est.pitch);
  cmd.v = std::clamp(gains.v_max * (roll / kHalfPi), -gains.v_max, gains.v_max);
  cmd.omega = std::clamp(gains.omega_max * (pitch / kHalfPi), -gains.omega_max, gains.omega_max);
  return cmd;
}

}  // namespace wristop
