#pragma once

// Inertial sample types, roll/pitch extraction and the sliding windows that
// feed gesture matching.
//
// Axis convention (right wrist, watch face up): x runs along the forearm
// toward the hand, y is lateral, z points out of the watch face. Roll is the
// rotation about x, pitch the rotation about y. Yaw is not estimated.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wristop/errors.hpp"
#include "wristop/signal.hpp"

namespace wristop {

using Vec3 = std::array<double, 3>;
using Micros = std::int64_t;

inline constexpr double kHalfPi = std::numbers::pi / 2.0;
inline constexpr double kGravity = 9.81;
inline constexpr double kDefaultSampleRateHz = 50.0;
inline constexpr double kDefaultFilterAlpha = 0.98;

/// Channels fed to gesture matching, in this order. The magnetometer is
/// stored on the sample but never enters a window.
inline constexpr std::size_t kMatchChannels = 6;
inline constexpr std::array<const char*, kMatchChannels> kChannelNames = {"ax", "ay", "az",
                                                                         "gx", "gy", "gz"};

struct ImuSample {
  Micros timestamp_us{0};
  Vec3 accel{};  // m/s^2
  Vec3 gyro{};   // rad/s
  std::optional<Vec3> mag;

  bool operator==(const ImuSample&) const = default;
};

struct OrientationEstimate {
  double roll{0.0};
  double pitch{0.0};
  Micros timestamp_us{0};

  bool operator==(const OrientationEstimate&) const = default;
};

struct RollPitch {
  double roll{0.0};
  double pitch{0.0};
};

inline double clamp_angle(double angle) { return std::clamp(angle, -kHalfPi, kHalfPi); }

inline double seconds_from_micros(Micros us) { return static_cast<double>(us) * 1e-6; }
inline Micros micros_from_seconds(double s) { return static_cast<Micros>(std::llround(s * 1e6)); }

/// Gravity-vector decomposition. Throws IndeterminateOrientation for a zero vector.
inline RollPitch accel_to_roll_pitch(const Vec3& accel) {
  const auto [ax, ay, az] = accel;
  if (ax == 0.0 && ay == 0.0 && az == 0.0) throw IndeterminateOrientation();
  const double roll = std::atan2(ay, az);
  const double pitch = std::atan2(-ax, std::hypot(ay, az));
  return {clamp_angle(roll), clamp_angle(pitch)};
}

/// Inverse of accel_to_roll_pitch for angles in [-pi/2, pi/2]: the specific
/// force a motionless device reports at that attitude.
inline Vec3 gravity_for(double roll, double pitch, double g = kGravity) {
  return {-g * std::sin(pitch), g * std::cos(pitch) * std::sin(roll),
          g * std::cos(pitch) * std::cos(roll)};
}

/// First-order complementary filter:
///   out = alpha * (prev + rate * dt) + (1 - alpha) * accel_angle
/// with gyro x driving roll and gyro y driving pitch. A zero accel vector
/// leaves only the gyro term.
inline OrientationEstimate update_orientation(const OrientationEstimate& prev,
                                              const ImuSample& sample, double dt, double alpha) {
  if (!(dt > 0.0)) throw ArgumentError("update_orientation: dt must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("update_orientation: alpha outside [0, 1]");

  const double roll_gyro = prev.roll + sample.gyro[0] * dt;
  const double pitch_gyro = prev.pitch + sample.gyro[1] * dt;

  OrientationEstimate out;
  out.timestamp_us = sample.timestamp_us;
  try {
    const RollPitch acc = accel_to_roll_pitch(sample.accel);
    out.roll = clamp_angle(alpha * roll_gyro + (1.0 - alpha) * acc.roll);
    out.pitch = clamp_angle(alpha * pitch_gyro + (1.0 - alpha) * acc.pitch);
  } catch (const IndeterminateOrientation&) {
    out.roll = clamp_angle(roll_gyro);
    out.pitch = clamp_angle(pitch_gyro);
  }
  return out;
}

/// Accelerometer-only estimate used to seed the filter on the first sample.
inline OrientationEstimate initial_orientation(const ImuSample& sample) {
  const RollPitch acc = accel_to_roll_pitch(sample.accel);
  return {acc.roll, acc.pitch, sample.timestamp_us};
}

inline std::array<double, kMatchChannels> match_channels(const ImuSample& s) {
  return {s.accel[0], s.accel[1], s.accel[2], s.gyro[0], s.gyro[1], s.gyro[2]};
}

/// Bounded multi-channel history of recent samples. Oldest samples are
/// evicted first; timestamps are strictly increasing.
class SignalWindow {
 public:
  SignalWindow(std::size_t channel_count, std::size_t capacity,
               double sample_rate_hz = kDefaultSampleRateHz)
      : channels_(channel_count), capacity_(capacity), sample_rate_hz_(sample_rate_hz) {
    if (channel_count == 0) throw ArgumentError("SignalWindow: channel count must be positive");
    if (capacity == 0) throw ArgumentError("SignalWindow: capacity must be positive");
    if (!(sample_rate_hz > 0.0)) throw ArgumentError("SignalWindow: sample rate must be positive");
  }

  std::size_t channel_count() const { return channels_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return timestamps_.size(); }
  bool empty() const { return timestamps_.empty(); }
  double sample_rate_hz() const { return sample_rate_hz_; }

  std::optional<Micros> newest_timestamp() const {
    if (timestamps_.empty()) return std::nullopt;
    return timestamps_.back();
  }

  /// Throws StaleSample (window unchanged) unless `timestamp_us` is newer
  /// than everything buffered.
  void push(Micros timestamp_us, std::span<const double> values) {
    if (values.size() != channels_.size()) throw ArgumentError("SignalWindow: channel count mismatch");
    if (!timestamps_.empty() && timestamp_us <= timestamps_.back()) {
      throw StaleSample("stale sample: t=" + std::to_string(timestamp_us) +
                        " us is not after newest t=" + std::to_string(timestamps_.back()) + " us");
    }
    if (timestamps_.size() == capacity_) {
      timestamps_.pop_front();
      for (auto& ch : channels_) ch.pop_front();
    }
    timestamps_.push_back(timestamp_us);
    for (std::size_t c = 0; c < channels_.size(); ++c) channels_[c].push_back(values[c]);
  }

  void push_sample(const ImuSample& sample) {
    const auto values = match_channels(sample);
    push(sample.timestamp_us, values);
  }

  /// Copy of the most recent `count` samples, oldest first.
  Signal tail(std::size_t count) const {
    if (count > size()) throw ArgumentError("SignalWindow: tail longer than window");
    Signal out(channels_.size(), count);
    const std::size_t start = size() - count;
    for (std::size_t c = 0; c < channels_.size(); ++c) {
      std::copy(channels_[c].begin() + static_cast<std::ptrdiff_t>(start), channels_[c].end(),
                out.channels[c].begin());
    }
    return out;
  }

  const std::deque<Micros>& timestamps() const { return timestamps_; }

 private:
  std::vector<std::deque<double>> channels_;
  std::deque<Micros> timestamps_;
  std::size_t capacity_;
  double sample_rate_hz_;
};

}  // namespace wristop
