#pragma once

// Scripted stand-in for a human operator: steers toward waypoints by tilting
// a virtual wrist, and renders those wrist angles (and gestures) as IMU
// samples so every run goes through the full recognition and mapping path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "wristop/command.hpp"
#include "wristop/gesture.hpp"
#include "wristop/imu_core.hpp"
#include "wristop/random.hpp"
#include "wristop/robot_sim.hpp"

namespace wristop {

struct AutopilotConfig {
  std::vector<Vec2> waypoints;
  /// A waypoint counts as passed once the robot centre is this close; the
  /// next one becomes the pursuit target.
  double lookahead{0.25};
  double angular_gain{2.5};  // 1/s
  /// Wrist tilt limit. Near pitch = pi/2 gravity carries no roll information,
  /// so a held wrist stays short of vertical.
  double max_tilt{0.4 * std::numbers::pi};

  void validate() const {
    if (!(lookahead > 0.0)) throw ArgumentError("autopilot: lookahead must be positive");
    if (!(angular_gain > 0.0)) throw ArgumentError("autopilot: angular gain must be positive");
    if (!(max_tilt > 0.0 && max_tilt <= std::numbers::pi / 2)) throw ArgumentError("autopilot: max tilt out of range");
  }
};

inline double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a - std::numbers::pi;
}

/// Wrist angles that make map_pose_to_velocity reproduce (v, omega), clamped
/// to +/-max_tilt.
inline OrientationEstimate angles_for_velocity(double v, double omega, const GainConfig& gains,
                                              double max_tilt = std::numbers::pi / 2) {
  return {std::clamp(v / gains.k_roll, -max_tilt, max_tilt), std::clamp(omega / gains.k_pitch, -max_tilt, max_tilt), 0};
}

class Autopilot {
 public:
  Autopilot(AutopilotConfig config, GainConfig gains) : config_(std::move(config)), gains_(gains) {
    config_.validate();
  }

  /// Wrist angles for the current world state. Heading error alpha to the
  /// active waypoint gives omega = gain * alpha and v = v_max * cos^2(alpha)
  /// (zero when the waypoint is behind). Returns (0, 0) after the last waypoint.
  OrientationEstimate step(const World& world) {
    const Vec2 here{world.pose.x, world.pose.y};
    while (active_ < config_.waypoints.size() && distance(here, config_.waypoints[active_]) <= config_.lookahead) {
      ++active_;
    }
    if (active_ >= config_.waypoints.size()) return {};
    const Vec2 target = config_.waypoints[active_];
    const double alpha = wrap_angle(std::atan2(target.y - here.y, target.x - here.x) - world.pose.theta);
    const double c = std::cos(alpha);
    const double v = c > 0.0 ? gains_.v_max * c * c : 0.0;
    const double omega = config_.angular_gain * alpha;
    return angles_for_velocity(v, omega, gains_, config_.max_tilt);
  }

  bool finished() const { return active_ >= config_.waypoints.size(); }
  std::size_t active_waypoint() const { return active_; }

 private:
  AutopilotConfig config_;
  GainConfig gains_;
  std::size_t active_{0};
};

/// Turns wrist angles and gesture requests into a timestamped IMU stream.
/// Accelerometer = gravity at the wrist attitude, gyro = finite-difference
/// attitude rate, both with optional white noise.
class WristEmulator {
 public:
  WristEmulator(double sample_rate_hz, std::uint64_t seed, double noise_sigma)
      : rate_(sample_rate_hz), noise_sigma_(noise_sigma), rng_(seed), seed_(seed) {}

  Micros next_timestamp() const { return sample_offset_us(index_, rate_); }
  bool gesture_in_progress() const { return gesture_pos_ < gesture_.size(); }

  /// Queues one synthesized repetition of `gesture`, performed from a level wrist.
  void perform(GestureClass gesture) {
    const Epoch e = synthesize_gesture(gesture, seed_ ^ (0x9e3779b97f4a7c15ull * ++gesture_count_), noise_sigma_, rate_);
    gesture_ = epoch_samples(e, 0);
    gesture_pos_ = 0;
  }

  /// Next sample: the queued gesture if any, otherwise the wrist held at `angles`.
  ImuSample next(const OrientationEstimate& angles) {
    ImuSample s;
    s.timestamp_us = next_timestamp();
    const double dt = 1.0 / rate_;
    if (gesture_in_progress()) {
      s.accel = gesture_[gesture_pos_].accel;
      s.gyro = gesture_[gesture_pos_].gyro;
      ++gesture_pos_;
      roll_ = 0.0;
      pitch_ = 0.0;
    } else {
      s.accel = gravity_for(angles.roll, angles.pitch);
      s.gyro = {(angles.roll - roll_) / dt, (angles.pitch - pitch_) / dt, 0.0};
      roll_ = angles.roll;
      pitch_ = angles.pitch;
      if (noise_sigma_ > 0.0) {
        for (double& a : s.accel) a += noise_sigma_ * rng_.normal();
        for (double& g : s.gyro) g += noise_sigma_ * rng_.normal();
      }
    }
    ++index_;
    return s;
  }

 private:
  double rate_;
  double noise_sigma_;
  DeterministicRng rng_;
  std::uint64_t seed_;
  std::uint64_t gesture_count_{0};
  std::size_t index_{0};
  std::vector<ImuSample> gesture_;
  std::size_t gesture_pos_{0};
  double roll_{0.0};
  double pitch_{0.0};
};

}  // namespace wristop
