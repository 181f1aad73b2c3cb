#include <gtest/gtest.h>

#include <numbers>

#include "wristop/command.hpp"
#include "wristop/config.hpp"
#include "wristop/pipeline.hpp"
#include "wristop/random.hpp"

using namespace wristop;

namespace {

constexpr double kPi = std::numbers::pi;

MatchDecision fired(GestureClass g, Micros t = 0) { return {g, 1.0, t}; }

ControllerState in_mode(OperationalMode m) {
  ControllerState s;
  s.mode = m;
  return s;
}

}  // namespace

TEST(StepMode, CircleEntersTeleoperated) {
  const auto r = step_mode(in_mode(OperationalMode::Autonomous), fired(GestureClass::Circle, 5));
  EXPECT_EQ(r.state.mode, OperationalMode::Teleoperated);
  EXPECT_EQ(r.state.last_fire_us, 5);
  EXPECT_EQ(r.events, (std::vector<ControllerEvent>{VibrationAck{GestureClass::Circle},
                                                    ModeChanged{OperationalMode::Teleoperated}}));
}

TEST(StepMode, CircleReturnsToAutonomous) {
  const auto r = step_mode(in_mode(OperationalMode::Teleoperated), fired(GestureClass::Circle));
  EXPECT_EQ(r.state.mode, OperationalMode::Autonomous);
  EXPECT_EQ(r.events, (std::vector<ControllerEvent>{VibrationAck{GestureClass::Circle},
                                                    ModeChanged{OperationalMode::Autonomous}}));
}

TEST(StepMode, OtherGesturesOnlyAcknowledge) {
  const auto r = step_mode(in_mode(OperationalMode::Autonomous), fired(GestureClass::Up));
  EXPECT_EQ(r.state.mode, OperationalMode::Autonomous);
  EXPECT_EQ(r.events, (std::vector<ControllerEvent>{VibrationAck{GestureClass::Up}}));
}

TEST(StepMode, ExhaustiveTable) {
  // Expected next mode for every (mode, decision) pair, written out by hand.
  struct Row {
    OperationalMode from;
    std::optional<GestureClass> g;
    OperationalMode to;
  };
  const auto A = OperationalMode::Autonomous;
  const auto T = OperationalMode::Teleoperated;
  const std::vector<Row> table = {
      {A, std::nullopt, A},         {T, std::nullopt, T},         {A, GestureClass::Up, A},
      {T, GestureClass::Up, T},     {A, GestureClass::Down, A},   {T, GestureClass::Down, T},
      {A, GestureClass::Circle, T}, {T, GestureClass::Circle, A}, {A, GestureClass::Left, A},
      {T, GestureClass::Left, T},   {A, GestureClass::Right, A},  {T, GestureClass::Right, T},
  };
  ASSERT_EQ(table.size(), 2u * (kAllGestures.size() + 1));
  for (const auto& row : table) {
    const ControllerState before = in_mode(row.from);
    const auto r = step_mode(before, MatchDecision{row.g, 0.9, 1234});
    EXPECT_EQ(r.state.mode, row.to);
    EXPECT_EQ(r.state.gains, before.gains);
    if (!row.g) {
      EXPECT_TRUE(r.events.empty());
      EXPECT_EQ(r.state, before);
      continue;
    }
    ASSERT_FALSE(r.events.empty());
    EXPECT_EQ(r.events.front(), ControllerEvent(VibrationAck{*row.g}));
    EXPECT_EQ(r.events.size(), row.from == row.to ? 1u : 2u);
    if (row.from != row.to) EXPECT_EQ(r.events.back(), ControllerEvent(ModeChanged{row.to}));
  }
}

TEST(StepMode, DoubleCircleIsIdentity) {
  for (OperationalMode m : {OperationalMode::Autonomous, OperationalMode::Teleoperated}) {
    const auto once = step_mode(in_mode(m), fired(GestureClass::Circle, 1));
    const auto twice = step_mode(once.state, fired(GestureClass::Circle, 2));
    EXPECT_EQ(twice.state.mode, m);
  }
}

TEST(StepMode, ExactlyOneAckPerRecognizedGesture) {
  DeterministicRng rng(99);
  ControllerState s;
  int recognised = 0, acks = 0, circles = 0, changes = 0;
  for (int i = 0; i < 10000; ++i) {
    MatchDecision d;
    d.timestamp_us = i;
    const auto pick = rng.next_u64() % 6;
    if (pick > 0) {
      d.gesture = gesture_from_id(static_cast<int>(pick));
      ++recognised;
      circles += *d.gesture == GestureClass::Circle;
    }
    const auto r = step_mode(s, d);
    for (const auto& ev : r.events) {
      acks += std::holds_alternative<VibrationAck>(ev);
      changes += std::holds_alternative<ModeChanged>(ev);
    }
    s = r.state;
  }
  EXPECT_EQ(acks, recognised);
  EXPECT_EQ(changes, circles);
  EXPECT_EQ(s.mode, circles % 2 == 0 ? OperationalMode::Autonomous : OperationalMode::Teleoperated);
}

TEST(MakeGains, Examples) {
  EXPECT_DOUBLE_EQ(make_gains(kPi / 2, 1.0).k_roll, 1.0);
  EXPECT_NEAR(make_gains(0.7, 1.0).k_roll, 1.4 / kPi, 1e-15);
  EXPECT_NEAR(make_gains(0.7, 1.0).k_roll, 0.4456, 1e-4);
  EXPECT_THROW(make_gains(0.0, 1.0), ArgumentError);
  EXPECT_THROW(make_gains(0.7, -1.0), ArgumentError);
  EXPECT_THROW(make_gains(std::nan(""), 1.0), ArgumentError);
}

TEST(MapPoseToVelocity, ZeroAnglesStop) {
  const auto c = map_pose_to_velocity({0, 0, 7}, make_gains(0.7, 1.0), OperationalMode::Teleoperated);
  EXPECT_EQ(c.v, 0.0);
  EXPECT_EQ(c.omega, 0.0);
  EXPECT_EQ(c.timestamp_us, 7);
}

TEST(MapPoseToVelocity, FullRollIsMaxSpeed) {
  const auto c = map_pose_to_velocity({kPi / 2, 0, 0}, make_gains(0.7, 1.0), OperationalMode::Teleoperated);
  EXPECT_EQ(c.v, 0.7);
  EXPECT_EQ(c.omega, 0.0);
}

TEST(MapPoseToVelocity, QuarterTurns) {
  const auto c = map_pose_to_velocity({kPi / 4, -kPi / 4, 0}, make_gains(0.7, 1.0), OperationalMode::Teleoperated);
  EXPECT_NEAR(c.v, 0.35, 1e-15);
  EXPECT_NEAR(c.omega, -0.5, 1e-15);
}

TEST(MapPoseToVelocity, AutonomousAlwaysStops) {
  const auto c = map_pose_to_velocity({1.0, 1.0, 0}, make_gains(0.7, 1.0), OperationalMode::Autonomous);
  EXPECT_EQ(c.v, 0.0);
  EXPECT_EQ(c.omega, 0.0);
}

TEST(MapPoseToVelocity, ContractOnAngleGrid) {
  const GainConfig gains = make_gains(0.7, 1.0);
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const double roll = -kPi / 2 + kPi * i / 100.0;
      const double pitch = -kPi / 2 + kPi * j / 100.0;
      const auto c = map_pose_to_velocity({roll, pitch, 0}, gains, OperationalMode::Teleoperated);
      ASSERT_NEAR(c.v, gains.k_roll * roll, 1e-15);
      ASSERT_NEAR(c.omega, gains.k_pitch * pitch, 1e-15);
      ASSERT_LE(std::abs(c.v), 0.7);
      ASSERT_LE(std::abs(c.omega), 1.0);
    }
  }
  EXPECT_EQ(map_pose_to_velocity({-kPi / 2, -kPi / 2, 0}, gains, OperationalMode::Teleoperated).v, -0.7);
  EXPECT_EQ(map_pose_to_velocity({-kPi / 2, -kPi / 2, 0}, gains, OperationalMode::Teleoperated).omega, -1.0);
}

TEST(MapPoseToVelocity, OutOfRangeAnglesSaturate) {
  const auto c = map_pose_to_velocity({3.0, -3.0, 0}, make_gains(0.7, 1.0), OperationalMode::Teleoperated);
  EXPECT_EQ(c.v, 0.7);
  EXPECT_EQ(c.omega, -1.0);
}

// -- Controller stage -------------------------------------------------------------

TEST(Controller, RateLimitsCommands) {
  Config cfg;
  cfg.command_rate_hz = 10;
  Controller ctl(cfg);
  int commands = 0;
  for (int i = 0; i < 50; ++i) {
    const Micros t = i * 20'000;
    commands += ctl.process({{0.1, 0.1, t}, {std::nullopt, 0.0, t}}).command.has_value();
  }
  EXPECT_EQ(commands, 10);  // 1 s of samples at 10 Hz
}

TEST(Controller, LeavingTeleoperationStopsImmediately) {
  Config cfg;
  cfg.command_rate_hz = 1;
  Controller ctl(cfg);
  ctl.process({{0.5, 0.5, 0}, {GestureClass::Circle, 1.0, 0}});
  ASSERT_EQ(ctl.state().mode, OperationalMode::Teleoperated);
  const auto out = ctl.process({{0.5, 0.5, 20'000}, {GestureClass::Circle, 1.0, 20'000}});
  ASSERT_TRUE(out.command);
  EXPECT_EQ(out.command->v, 0.0);
  EXPECT_EQ(out.command->omega, 0.0);
}

TEST(Controller, MirroringFlipsSigns) {
  Config cfg;
  cfg.mirror_roll = true;
  Controller ctl(cfg);
  ctl.process({{0.0, 0.0, 0}, {GestureClass::Circle, 1.0, 0}});
  const auto out = ctl.process({{0.5, 0.25, 100'000}, {std::nullopt, 0.0, 100'000}});
  ASSERT_TRUE(out.command);
  EXPECT_LT(out.command->v, 0.0);
  EXPECT_GT(out.command->omega, 0.0);
}
