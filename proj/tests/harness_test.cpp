#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <sys/wait.h>

#include "wristop/harness.hpp"

using namespace wristop;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<GestureTemplate>& templates() {
  static const auto t = synthetic_templates();
  return t;
}

struct CliResult {
  int status;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(WRISTOP_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int rc = pclose(pipe);
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, out};
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("wristop_harness_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::vector<ImuSample> padded_circle_trace() {
  std::vector<ImuSample> trace;
  std::size_t index = 0;
  auto append = [&](const Epoch& e) {
    for (auto s : epoch_samples(e, 0)) {
      s.timestamp_us = sample_offset_us(index++, kDefaultSampleRateHz);
      trace.push_back(s);
    }
  };
  append(synthesize_rest(50, 1, 0.05));
  append(synthesize_gesture(GestureClass::Circle, 2, 0.05));
  append(synthesize_rest(50, 3, 0.05));
  return trace;
}

}  // namespace

// -- Scenario runs ----------------------------------------------------------------------

TEST(RunScenario, SlalomCleanRun) {
  const auto r = run_scenario(builtin_scenario(ScenarioKind::Slalom), templates(), RunOptions{});
  EXPECT_TRUE(r.report.goal_reached);
  EXPECT_EQ(r.report.pin_contacts, 0);
  EXPECT_EQ(r.report.wall_contacts, 0);
  EXPECT_EQ(r.report.total_time, r.report.travel_time);
  ASSERT_EQ(r.report.detections.size(), 1u);
  EXPECT_EQ(r.report.detections[0].gesture, GestureClass::Circle);
}

TEST(RunScenario, TargetsKnocksEveryPin) {
  const auto r = run_scenario(builtin_scenario(ScenarioKind::Targets), templates(), RunOptions{});
  EXPECT_TRUE(r.report.goal_reached);
  EXPECT_EQ(r.world.standing_pins(), 0u);
  EXPECT_EQ(r.report.pin_contacts, 7);
}

TEST(RunScenario, BuildingVisitsBothRooms) {
  const auto r = run_scenario(builtin_scenario(ScenarioKind::Building), templates(), RunOptions{});
  EXPECT_TRUE(r.report.goal_reached);
}

TEST(RunScenario, DeterministicForSeed) {
  RunOptions o;
  o.seed = 17;
  const auto a = run_scenario(builtin_scenario(ScenarioKind::Slalom), templates(), o);
  const auto b = run_scenario(builtin_scenario(ScenarioKind::Slalom), templates(), o);
  EXPECT_EQ(report_to_json(a.report).dump(), report_to_json(b.report).dump());
  EXPECT_EQ(a.log, b.log);
}

TEST(RunScenario, ReportRecomputesFromLog) {
  for (ScenarioKind k : {ScenarioKind::Slalom, ScenarioKind::Targets, ScenarioKind::Building}) {
    const auto r = run_scenario(builtin_scenario(k), templates(), RunOptions{});
    std::stringstream buf;
    write_event_log(buf, r.log);
    EXPECT_EQ(report_from_log(read_event_log(buf)), r.report);
  }
}

TEST(RunScenario, EveryCommandComesFromTheMapping) {
  RunOptions o;
  const GainConfig gains = o.config.gains();
  std::size_t commands = 0, driving = 0;
  double worst_tracking = 0.0;
  OperationalMode mode = OperationalMode::Autonomous;
  auto observer = [&](const TickRecord& rec) {
    for (const auto& ev : rec.output.events) {
      if (const auto* mc = std::get_if<ModeChanged>(&ev)) mode = mc->mode;
    }
    if (!rec.output.command) return;
    ++commands;
    EXPECT_EQ(*rec.output.command, map_pose_to_velocity(rec.output.mapped_from, gains, mode));
    if (rec.driving && mode == OperationalMode::Teleoperated) {
      ++driving;
      worst_tracking = std::max({worst_tracking, std::abs(rec.output.estimate.roll - rec.autopilot_angles.roll),
                                 std::abs(rec.output.estimate.pitch - rec.autopilot_angles.pitch)});
    }
  };
  const auto r = run_scenario(builtin_scenario(ScenarioKind::Slalom), templates(), o, observer);
  EXPECT_EQ(commands, r.report.command_count);
  EXPECT_GT(driving, 100u);
  EXPECT_LT(worst_tracking, 0.5);
}

TEST(RunScenario, RejectsBadTickRate) {
  RunOptions o;
  o.tick_hz = 0;
  EXPECT_THROW(run_scenario(builtin_scenario(ScenarioKind::Slalom), templates(), o), ArgumentError);
}

// -- Autopilot ------------------------------------------------------------------------------

TEST(Autopilot, FarGoalAheadIsFullForward) {
  World w = builtin_scenario(ScenarioKind::Slalom).world;
  w.pose = {1, 1, 0};
  Autopilot ap({{{100, 1}}, 0.25, 2.5}, make_gains(0.7, 1.0));
  const auto a = ap.step(w);
  EXPECT_EQ(a.roll, 0.4 * kPi);
  EXPECT_NEAR(a.pitch, 0.0, 1e-12);

  Autopilot upright({{{100, 1}}, 0.25, 2.5, kPi / 2}, make_gains(0.7, 1.0));
  EXPECT_NEAR(upright.step(w).roll, kPi / 2, 1e-12);
}

TEST(Autopilot, GoalBehindIsMaxTurn) {
  World w;
  w.pose = {1, 1, 0};
  Autopilot ap({{{-5, 1.0001}}, 0.25, 2.5}, make_gains(0.7, 1.0));
  const auto a = ap.step(w);
  EXPECT_EQ(std::abs(a.pitch), 0.4 * kPi);
  EXPECT_EQ(a.roll, 0.0);
}

TEST(Autopilot, RejectsBadTiltLimit) {
  EXPECT_THROW(Autopilot({{{1, 1}}, 0.25, 2.5, 0.0}, make_gains(0.7, 1.0)), ArgumentError);
  EXPECT_THROW(Autopilot({{{1, 1}}, 0.25, 2.5, 2.0}, make_gains(0.7, 1.0)), ArgumentError);
}

TEST(Autopilot, ReachedGoalStops) {
  World w;
  w.pose = {1, 1, 0};
  Autopilot ap({{{1.1, 1}}, 0.25, 2.5}, make_gains(0.7, 1.0));
  const auto a = ap.step(w);
  EXPECT_EQ(a.roll, 0.0);
  EXPECT_EQ(a.pitch, 0.0);
  EXPECT_TRUE(ap.finished());
}

TEST(Autopilot, AnglesStayInRange) {
  World w;
  Autopilot ap({{{3, 4}}, 0.1, 50.0}, make_gains(0.7, 1.0));
  for (double th = 0; th < 2 * kPi; th += 0.01) {
    w.pose.theta = th;
    const auto a = ap.step(w);
    ASSERT_LE(std::abs(a.roll), kPi / 2);
    ASSERT_LE(std::abs(a.pitch), kPi / 2);
  }
}

TEST(Autopilot, RejectsNonPositiveLookahead) {
  EXPECT_THROW(Autopilot({{{1, 1}}, 0.0, 1.0}, make_gains(0.7, 1.0)), ArgumentError);
}

// -- Replay -----------------------------------------------------------------------------------

TEST(Replay, EmptyTrace) {
  const auto r = replay({}, templates(), Config{}, builtin_scenario(ScenarioKind::Slalom));
  EXPECT_TRUE(r.report.detections.empty());
  EXPECT_EQ(r.report.command_count, 0u);
}

TEST(Replay, PaddedCircleGivesOneDetection) {
  const auto r = replay(padded_circle_trace(), templates(), Config{}, builtin_scenario(ScenarioKind::Slalom));
  ASSERT_EQ(r.report.detections.size(), 1u);
  EXPECT_EQ(r.report.detections[0].gesture, GestureClass::Circle);
}

TEST(Replay, Deterministic) {
  const auto trace = padded_circle_trace();
  const auto a = replay(trace, templates(), Config{}, builtin_scenario(ScenarioKind::Slalom));
  const auto b = replay(trace, templates(), Config{}, builtin_scenario(ScenarioKind::Slalom));
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.log, b.log);
}

// -- Training ----------------------------------------------------------------------------------

TEST(Train, NoiselessEpochsReproduceTheGenerator) {
  const auto [trace, marks] = synthetic_training_session({GestureClass::Circle}, 60, 0.0, 5);
  ASSERT_EQ(marks.size(), 60u);
  const auto t = train(trace, marks, Config{});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].gesture, GestureClass::Circle);
  EXPECT_EQ(t[0].training_count, 60);
  EXPECT_EQ(t[0].epoch, synthesize_gesture(GestureClass::Circle, 0, 0.0));
}

TEST(Train, OneTemplatePerClassPresent) {
  const auto [trace, marks] = synthetic_training_session({GestureClass::Up, GestureClass::Left}, 5, 0.4, 6);
  const auto t = train(trace, marks, Config{});
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].gesture, GestureClass::Up);
  EXPECT_EQ(t[1].gesture, GestureClass::Left);
}

TEST(Train, IntervalBeyondTraceIsAnError) {
  auto [trace, marks] = synthetic_training_session({GestureClass::Up}, 2, 0.4, 7);
  marks.back().end_us = trace.back().timestamp_us + 5'000'000;
  marks.back().start_us = trace.back().timestamp_us + 1'000'000;
  EXPECT_THROW(train(trace, marks, Config{}), DataError);
  EXPECT_THROW(train(trace, {}, Config{}), DataError);
}

TEST(Train, StoreRoundTrip) {
  const auto [trace, marks] = synthetic_training_session({GestureClass::Down, GestureClass::Circle}, 4, 0.4, 8);
  const auto t = train(trace, marks, Config{});
  std::stringstream buf;
  save_templates(buf, t);
  EXPECT_EQ(load_templates(buf), t);
}

TEST(Train, SidecarRoundTripAndErrors) {
  const std::vector<EpochMark> marks = {{0, 1200000, GestureClass::Circle}, {2000000, 3200000, GestureClass::Left}};
  std::stringstream buf;
  write_epoch_sidecar(buf, marks);
  const auto back = read_epoch_sidecar(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].gesture, GestureClass::Left);
  EXPECT_EQ(back[1].end_us, 3200000);
  std::stringstream bad(R"({"start_us": 5, "end_us": 1, "class": "Up"})");
  EXPECT_THROW(read_epoch_sidecar(bad), ParseError);
  std::stringstream numeric(R"({"start_us": 0, "end_us": 10, "class": 3})");
  EXPECT_EQ(read_epoch_sidecar(numeric).at(0).gesture, GestureClass::Circle);
}

// -- Command line ------------------------------------------------------------------------------

TEST(Cli, SimulateIsByteIdenticalAcrossRuns) {
  const auto a = run_cli("simulate --scenario slalom --seed 3");
  const auto b = run_cli("simulate --scenario slalom --seed 3");
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_TRUE(j["goal_reached"].get<bool>());
  EXPECT_EQ(j["pin_contacts"].get<int>(), 0);
}

TEST(Cli, ScoreReproducesSimulateReport) {
  const fs::path log = scratch_dir() / "run.jsonl";
  const auto sim = run_cli("simulate --scenario targets --log " + log.string());
  ASSERT_EQ(sim.status, 0);
  const auto score = run_cli("score " + log.string());
  ASSERT_EQ(score.status, 0);
  auto a = nlohmann::json::parse(sim.out);
  a.erase("pins_knocked");
  EXPECT_EQ(a, nlohmann::json::parse(score.out));
}

TEST(Cli, TrainReplayAndMatchFromFiles) {
  const fs::path dir = scratch_dir();
  const auto [trace, marks] = synthetic_training_session({GestureClass::Circle, GestureClass::Up}, 10, 0.4, 9);
  {
    std::ofstream t(dir / "train.jsonl");
    write_trace(t, trace);
    std::ofstream m(dir / "epochs.jsonl");
    write_epoch_sidecar(m, marks);
    std::ofstream c(dir / "circle.jsonl");
    write_trace(c, padded_circle_trace());
  }
  const auto tr = run_cli("train " + (dir / "train.jsonl").string() + " " + (dir / "epochs.jsonl").string() +
                          " -o " + (dir / "templates.json").string());
  ASSERT_EQ(tr.status, 0);
  const auto rp = run_cli("replay " + (dir / "circle.jsonl").string() + " --templates " + (dir / "templates.json").string());
  ASSERT_EQ(rp.status, 0);
  const auto dets = nlohmann::json::parse(rp.out)["detections"];
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0]["class"], "Circle");

  const auto m = run_cli("match " + (dir / "circle.jsonl").string() + " --at-us " +
                         std::to_string(dets[0]["t_us"].get<Micros>()));
  ASSERT_EQ(m.status, 0);
  EXPECT_EQ(nlohmann::json::parse(m.out)["gesture"], "Circle");
}

TEST(Cli, SampleDataFilesLoad) {
  const std::string data = WRISTOP_DATA_DIR;
  EXPECT_EQ(run_cli("simulate --scenario " + data + "/slalom.json --config " + data + "/config.json").status, 0);
  EXPECT_EQ(run_cli("replay " + data + "/circle_trace.jsonl").status, 0);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir();
  EXPECT_EQ(run_cli("").status, 1);
  EXPECT_EQ(run_cli("simulate --bogus").status, 1);
  EXPECT_EQ(run_cli("simulate --tick-hz -5").status, 1);
  EXPECT_EQ(run_cli("simulate --scenario nowhere.json").status, 2);
  {
    std::ofstream bad(dir / "bad.jsonl");
    bad << R"({"t_us": 1, "ax": 0})" << "\n";
  }
  EXPECT_EQ(run_cli("replay " + (dir / "bad.jsonl").string()).status, 2);
  EXPECT_EQ(run_cli("score " + (dir / "missing.jsonl").string()).status, 2);
  EXPECT_EQ(run_cli("serve --port 0 --latency-ms -1").status, 1);
}
