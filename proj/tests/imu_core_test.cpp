#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "wristop/imu_core.hpp"
#include "wristop/random.hpp"

using namespace wristop;

namespace {

constexpr double kPi = std::numbers::pi;

ImuSample sample_with(Micros t, Vec3 accel, Vec3 gyro = {0, 0, 0}) {
  ImuSample s;
  s.timestamp_us = t;
  s.accel = accel;
  s.gyro = gyro;
  return s;
}

}  // namespace

TEST(AccelToRollPitch, LevelDeviceIsZero) {
  const auto rp = accel_to_roll_pitch({0, 0, 9.81});
  EXPECT_EQ(rp.roll, 0.0);
  EXPECT_EQ(rp.pitch, 0.0);
}

TEST(AccelToRollPitch, RolledQuarterTurn) {
  const auto rp = accel_to_roll_pitch({0, 6.937, 6.937});
  EXPECT_NEAR(rp.roll, kPi / 4, 1e-3);
  EXPECT_NEAR(rp.pitch, 0.0, 1e-3);
}

TEST(AccelToRollPitch, PitchedStraightUp) {
  const auto rp = accel_to_roll_pitch({-9.81, 0, 0});
  EXPECT_EQ(rp.roll, 0.0);
  EXPECT_DOUBLE_EQ(rp.pitch, kPi / 2);
}

TEST(AccelToRollPitch, ZeroVectorIsIndeterminate) {
  EXPECT_THROW(accel_to_roll_pitch({0, 0, 0}), IndeterminateOrientation);
}

TEST(AccelToRollPitch, UpsideDownRollIsClamped) {
  const auto rp = accel_to_roll_pitch({0, 1, -9.81});
  EXPECT_EQ(rp.roll, kPi / 2);
}

TEST(AccelToRollPitch, InvertsGravityFor) {
  DeterministicRng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const double roll = rng.uniform(-kPi / 2, kPi / 2);
    const double pitch = rng.uniform(-kPi / 2 + 1e-3, kPi / 2 - 1e-3);
    const auto rp = accel_to_roll_pitch(gravity_for(roll, pitch));
    ASSERT_NEAR(rp.roll, roll, 1e-9);
    ASSERT_NEAR(rp.pitch, pitch, 1e-9);
  }
}

TEST(UpdateOrientation, AlphaOneIsPureIntegration) {
  const auto est = update_orientation({0, 0, 0}, sample_with(1'000'000, {0, 0, 9.81}, {0.1, 0, 0}), 1.0, 1.0);
  EXPECT_DOUBLE_EQ(est.roll, 0.1);
  EXPECT_EQ(est.pitch, 0.0);
  EXPECT_EQ(est.timestamp_us, 1'000'000);
}

TEST(UpdateOrientation, AlphaZeroIsPureAccelerometer) {
  const auto est = update_orientation({0.7, -0.3, 0}, sample_with(20'000, {0, 0, 9.81}, {3, 3, 3}), 0.02, 0.0);
  EXPECT_EQ(est.roll, 0.0);
  EXPECT_EQ(est.pitch, 0.0);
}

TEST(UpdateOrientation, BlendAtDefaultAlpha) {
  const auto est = update_orientation({0, 0, 0}, sample_with(20'000, {0, 6.937, 6.937}), 0.02, 0.98);
  EXPECT_NEAR(est.roll, 0.02 * (kPi / 4), 1e-6);
}

TEST(UpdateOrientation, OutputStaysInRange) {
  DeterministicRng rng(5);
  OrientationEstimate est{0, 0, 0};
  for (int i = 1; i <= 5000; ++i) {
    const Vec3 a{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20)};
    const Vec3 g{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
    est = update_orientation(est, sample_with(i * 20'000, a, g), 0.02, rng.uniform());
    ASSERT_LE(std::abs(est.roll), kPi / 2);
    ASSERT_LE(std::abs(est.pitch), kPi / 2);
  }
}

TEST(UpdateOrientation, ZeroAccelFallsBackToGyro) {
  const auto est = update_orientation({0.1, 0.2, 0}, sample_with(10, {0, 0, 0}, {1, -1, 0}), 0.1, 0.98);
  EXPECT_DOUBLE_EQ(est.roll, 0.2);
  EXPECT_DOUBLE_EQ(est.pitch, 0.1);
}

TEST(UpdateOrientation, RejectsBadArguments) {
  const auto s = sample_with(10, {0, 0, 9.81});
  EXPECT_THROW(update_orientation({}, s, 0.0, 0.5), ArgumentError);
  EXPECT_THROW(update_orientation({}, s, 0.01, 1.5), ArgumentError);
  EXPECT_THROW(update_orientation({}, s, 0.01, std::nan("")), ArgumentError);
}

TEST(SignalWindow, FirstPush) {
  SignalWindow w(kMatchChannels, 128);
  w.push_sample(sample_with(1, {0, 0, 9.81}));
  EXPECT_EQ(w.size(), 1u);
  EXPECT_EQ(w.newest_timestamp(), 1);
}

TEST(SignalWindow, EvictsOldestWhenFull) {
  SignalWindow w(kMatchChannels, 128);
  for (int i = 0; i < 128; ++i) w.push_sample(sample_with(i + 1, {double(i), 0, 9.81}));
  w.push_sample(sample_with(200, {999, 0, 9.81}));
  EXPECT_EQ(w.size(), 128u);
  EXPECT_EQ(w.timestamps().front(), 2);
  const Signal all = w.tail(128);
  EXPECT_EQ(all.channels[0].front(), 1.0);
  EXPECT_EQ(all.channels[0].back(), 999.0);
}

TEST(SignalWindow, StaleSampleLeavesWindowUnchanged) {
  SignalWindow w(kMatchChannels, 4);
  w.push_sample(sample_with(10, {1, 2, 3}));
  w.push_sample(sample_with(20, {4, 5, 6}));
  const Signal before = w.tail(2);
  EXPECT_THROW(w.push_sample(sample_with(20, {7, 8, 9})), StaleSample);
  EXPECT_THROW(w.push_sample(sample_with(5, {7, 8, 9})), StaleSample);
  EXPECT_EQ(w.size(), 2u);
  EXPECT_EQ(w.tail(2), before);
}

TEST(SignalWindow, TailIsOldestFirst) {
  SignalWindow w(kMatchChannels, 8);
  for (int i = 1; i <= 5; ++i) w.push_sample(sample_with(i, {double(i), 0, 0}, {0, 0, double(-i)}));
  const Signal t = w.tail(3);
  EXPECT_EQ(t.channels[0], (std::vector<double>{3, 4, 5}));
  EXPECT_EQ(t.channels[5], (std::vector<double>{-3, -4, -5}));
  EXPECT_THROW(w.tail(6), ArgumentError);
}

TEST(SignalWindow, RejectsZeroCapacity) { EXPECT_THROW(SignalWindow(6, 0), ArgumentError); }

TEST(MatchChannels, ExcludesMagnetometer) {
  ImuSample s = sample_with(1, {1, 2, 3}, {4, 5, 6});
  s.mag = Vec3{7, 8, 9};
  const auto v = match_channels(s);
  EXPECT_EQ(v, (std::array<double, 6>{1, 2, 3, 4, 5, 6}));
}
