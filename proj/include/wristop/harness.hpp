#pragma once

// Batch entry points: headless scenario runs driven by the autopilot, trace
// replay, template training, and report reconstruction from event logs.
//
// Every run writes an event log (one JSON object per line). A RunReport is
// always computed from that log, so `report_from_log(read_event_log(...))`
// reproduces the report of the run that wrote it.

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wristop/autopilot.hpp"
#include "wristop/config.hpp"
#include "wristop/errors.hpp"
#include "wristop/gesture.hpp"
#include "wristop/pipeline.hpp"
#include "wristop/robot_sim.hpp"
#include "wristop/scenario.hpp"
#include "wristop/template_store.hpp"
#include "wristop/trace.hpp"

namespace wristop {

using EventLog = std::vector<nlohmann::ordered_json>;

struct Detection {
  Micros timestamp_us{0};
  GestureClass gesture{GestureClass::Up};
  double score{0.0};

  bool operator==(const Detection&) const = default;
};

struct RunReport {
  std::string scenario;
  bool goal_reached{false};
  double travel_time{0.0};
  int pin_contacts{0};
  double total_time{0.0};
  int wall_contacts{0};
  double elapsed{0.0};
  std::vector<Detection> detections;
  std::size_t command_count{0};

  bool operator==(const RunReport&) const = default;
};

inline nlohmann::ordered_json report_to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["goal_reached"] = r.goal_reached;
  j["travel_time"] = r.travel_time;
  j["pin_contacts"] = r.pin_contacts;
  j["total_time"] = r.total_time;
  j["wall_contacts"] = r.wall_contacts;
  j["elapsed"] = r.elapsed;
  j["command_count"] = r.command_count;
  auto& dets = j["detections"] = nlohmann::ordered_json::array();
  for (const auto& d : r.detections) {
    dets.push_back({{"t_us", d.timestamp_us}, {"class", std::string(to_string(d.gesture))}, {"score", d.score}});
  }
  return j;
}

// ---------------------------------------------------------------------------
// Event log

namespace log_record {

inline nlohmann::ordered_json run(const std::string& scenario, ScoringMode scoring) {
  return {{"type", "run"}, {"scenario", scenario},
          {"scoring", scoring == ScoringMode::PinPenalty ? "pin_penalty" : "travel_only"}};
}

inline nlohmann::ordered_json detection(const MatchDecision& d) {
  return {{"type", "detection"}, {"t_us", d.timestamp_us}, {"class", std::string(to_string(*d.gesture))},
          {"score", d.score}};
}

inline nlohmann::ordered_json mode(Micros t, OperationalMode m) {
  return {{"type", "mode"}, {"t_us", t}, {"mode", std::string(to_string(m))}};
}

inline nlohmann::ordered_json command(const VelocityCommand& c) {
  return {{"type", "command"}, {"t_us", c.timestamp_us}, {"v", c.v}, {"omega", c.omega}};
}

inline nlohmann::ordered_json sim(const SimEvent& e) {
  nlohmann::ordered_json j = {{"type", "sim"}, {"kind", std::string(to_string(e.kind))}, {"time", e.time}};
  if (e.pin) j["pin"] = *e.pin;
  return j;
}

inline nlohmann::ordered_json end(double elapsed) { return {{"type", "end"}, {"time", elapsed}}; }

}  // namespace log_record

inline void write_event_log(std::ostream& out, const EventLog& log) {
  for (const auto& rec : log) out << rec.dump() << '\n';
}

inline EventLog read_event_log(std::istream& in, const std::string& source = {}) {
  EventLog log;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (detail::is_blank(text)) continue;
    try {
      auto rec = nlohmann::ordered_json::parse(text);
      if (!rec.is_object() || !rec.contains("type") || !rec["type"].is_string()) {
        throw ParseError(source, line, "type", "expected an object with a string 'type'");
      }
      log.push_back(std::move(rec));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(source, line, "", e.what());
    }
  }
  return log;
}

/// Recomputes a report from an event log. Travel time runs from the first
/// non-zero velocity command to GoalReached (or to the end of the run).
inline RunReport report_from_log(const EventLog& log) {
  RunReport r;
  ScoringMode scoring = ScoringMode::TravelOnly;
  std::optional<double> first_motion;
  std::optional<double> goal_time;
  std::vector<SimEvent> sim_events;
  try {
    for (const auto& rec : log) {
      const std::string type = rec.at("type").get<std::string>();
      if (type == "run") {
        r.scenario = rec.at("scenario").get<std::string>();
        scoring = rec.at("scoring").get<std::string>() == "pin_penalty" ? ScoringMode::PinPenalty
                                                                        : ScoringMode::TravelOnly;
      } else if (type == "detection") {
        const auto g = gesture_from_string(rec.at("class").get<std::string>());
        if (!g) throw DataError("event log: unknown gesture class");
        r.detections.push_back({rec.at("t_us").get<Micros>(), *g, rec.at("score").get<double>()});
      } else if (type == "command") {
        ++r.command_count;
        if (!first_motion && (rec.at("v").get<double>() != 0.0 || rec.at("omega").get<double>() != 0.0)) {
          first_motion = seconds_from_micros(rec.at("t_us").get<Micros>());
        }
      } else if (type == "sim") {
        const std::string kind = rec.at("kind").get<std::string>();
        SimEvent e;
        e.time = rec.at("time").get<double>();
        if (kind == "pin_contact") {
          e.kind = SimEventKind::PinContact;
          e.pin = rec.at("pin").get<std::size_t>();
        } else if (kind == "goal_reached") {
          e.kind = SimEventKind::GoalReached;
          if (!goal_time) goal_time = e.time;
        } else if (kind == "wall_contact") {
          e.kind = SimEventKind::WallContact;
          ++r.wall_contacts;
        } else {
          throw DataError("event log: unknown sim event '" + kind + "'");
        }
        sim_events.push_back(e);
      } else if (type == "end") {
        r.elapsed = rec.at("time").get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("event log: ") + e.what());
  }
  r.goal_reached = goal_time.has_value();
  const double stop = goal_time.value_or(r.elapsed);
  const double travel = first_motion ? std::max(0.0, stop - *first_motion) : 0.0;
  const RunScore score = score_run(sim_events, scoring, travel);
  r.travel_time = score.travel_time;
  r.pin_contacts = score.pins_touched;
  r.total_time = score.total_time;
  return r;
}

// ---------------------------------------------------------------------------
// Scenario runs

struct RunOptions {
  Config config{};
  std::uint64_t seed{1};
  double tick_hz{50.0};
  double max_seconds{300.0};
  /// Sensor noise of the emulated wrist (gestures and tilt).
  double wrist_noise_sigma{0.05};
  std::optional<AutopilotConfig> autopilot;  // default: derived from the scenario
};

/// Per-sample trace for tests that check where commands came from.
struct TickRecord {
  OrientationEstimate autopilot_angles;
  bool driving{false};
  PipelineOutput output;
};

struct RunResult {
  RunReport report;
  EventLog log;
  World world;
};

/// Runs `scenario` with the autopilot as operator: a Circle gesture switches
/// the controller to Teleoperated, then the autopilot steers by wrist angle.
/// Every command reaching the simulator comes out of the pipeline.
inline RunResult run_scenario(const Scenario& scenario, const std::vector<GestureTemplate>& templates,
                              const RunOptions& options,
                              const std::function<void(const TickRecord&)>& observer = {}) {
  if (!(options.tick_hz > 0.0)) throw ArgumentError("run_scenario: tick rate must be positive");
  TeleopPipeline pipeline(options.config, templates);
  const GainConfig gains = pipeline.state().gains;
  AutopilotConfig ap_cfg = options.autopilot.value_or(AutopilotConfig{effective_route(scenario), 0.25, 2.5});
  if (ap_cfg.waypoints.empty()) ap_cfg.waypoints = effective_route(scenario);
  Autopilot autopilot(ap_cfg, gains);
  WristEmulator wrist(options.config.sample_rate_hz, options.seed, options.wrist_noise_sigma);

  World world = scenario.world;
  reset_progress(world);
  EventLog log;
  log.push_back(log_record::run(scenario.name, world.scoring));

  const double dt = 1.0 / options.tick_hz;
  const auto max_ticks = static_cast<std::uint64_t>(std::ceil(options.max_seconds * options.tick_hz));

  // Operator script: rest, Circle, wait for the acknowledgement, settle, drive.
  const Micros lead_in_us = micros_from_seconds(0.5);
  const Micros settle_us = micros_from_seconds(0.5);
  const Micros retry_after_us = micros_from_seconds(1.5);
  bool acknowledged = false;
  int attempts = 0;
  std::optional<Micros> gesture_end_us;
  std::optional<Micros> drive_from_us;

  VelocityCommand latest;
  for (std::uint64_t tick = 1; tick <= max_ticks; ++tick) {
    const Micros tick_us = static_cast<Micros>(std::llround(static_cast<double>(tick) * 1e6 / options.tick_hz));
    while (wrist.next_timestamp() <= tick_us) {
      const Micros t = wrist.next_timestamp();
      TickRecord rec;
      if (!acknowledged && !wrist.gesture_in_progress() && t >= lead_in_us &&
          (!gesture_end_us || t - *gesture_end_us >= retry_after_us)) {
        if (attempts == 3) throw DataError("run_scenario: Circle gesture not recognised after 3 attempts");
        ++attempts;
        wrist.perform(GestureClass::Circle);
      }
      const bool was_gesturing = wrist.gesture_in_progress();
      if (drive_from_us && t >= *drive_from_us && pipeline.state().mode == OperationalMode::Teleoperated) {
        rec.autopilot_angles = autopilot.step(world);
        rec.driving = true;
      }
      const ImuSample sample = wrist.next(rec.autopilot_angles);
      if (was_gesturing && !wrist.gesture_in_progress()) gesture_end_us = t;

      rec.output = pipeline.process(sample);
      const auto& out = rec.output;
      if (out.decision.gesture) log.push_back(log_record::detection(out.decision));
      for (const auto& ev : out.events) {
        if (const auto* mc = std::get_if<ModeChanged>(&ev)) {
          log.push_back(log_record::mode(t, mc->mode));
        } else if (std::get<VibrationAck>(ev).gesture == GestureClass::Circle) {
          acknowledged = true;
        }
      }
      if (acknowledged && !drive_from_us && !wrist.gesture_in_progress()) drive_from_us = t + settle_us;
      if (out.command) {
        latest = *out.command;
        log.push_back(log_record::command(latest));
      }
      if (observer) observer(rec);
    }

    for (const auto& e : step_world(world, latest, dt)) log.push_back(log_record::sim(e));
    if (world.goal_reached) break;
  }
  log.push_back(log_record::end(world.elapsed));

  RunResult result{report_from_log(log), std::move(log), std::move(world)};
  return result;
}

// ---------------------------------------------------------------------------
// Replay

struct ReplayResult {
  RunReport report;
  EventLog log;
};

/// Feeds recorded samples through the pipeline and drives `scenario` with
/// the resulting commands, one world step per sample interval.
inline ReplayResult replay(const std::vector<ImuSample>& samples, const std::vector<GestureTemplate>& templates,
                           const Config& config, const Scenario& scenario) {
  TeleopPipeline pipeline(config, templates);
  World world = scenario.world;
  reset_progress(world);
  EventLog log;
  log.push_back(log_record::run(scenario.name, world.scoring));
  VelocityCommand latest;
  std::optional<Micros> previous;
  for (const auto& s : samples) {
    if (previous) {
      const double dt = seconds_from_micros(s.timestamp_us - *previous);
      if (dt > 0.0) {
        for (const auto& e : step_world(world, latest, dt)) log.push_back(log_record::sim(e));
      }
    }
    previous = s.timestamp_us;
    const PipelineOutput out = pipeline.process(s);
    if (out.decision.gesture) log.push_back(log_record::detection(out.decision));
    for (const auto& ev : out.events) {
      if (const auto* mc = std::get_if<ModeChanged>(&ev)) log.push_back(log_record::mode(s.timestamp_us, mc->mode));
    }
    if (out.command) {
      latest = *out.command;
      log.push_back(log_record::command(latest));
    }
  }
  log.push_back(log_record::end(world.elapsed));
  return {report_from_log(log), std::move(log)};
}

// ---------------------------------------------------------------------------
// Training

struct EpochMark {
  Micros start_us{0};
  Micros end_us{0};
  GestureClass gesture{GestureClass::Up};
};

/// Sidecar: one JSON object per line, {"start_us": ..., "end_us": ..., "class": "Circle"}.
/// `class` may also be the numeric id.
inline std::vector<EpochMark> read_epoch_sidecar(std::istream& in, const std::string& source = {}) {
  std::vector<EpochMark> marks;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (detail::is_blank(text)) continue;
    const auto j = detail::parse_json_line(text, source, line);
    EpochMark m;
    for (const char* key : {"start_us", "end_us"}) {
      if (!j.contains(key) || !j[key].is_number_integer()) throw ParseError(source, line, key, "expected an integer");
    }
    m.start_us = j["start_us"].get<Micros>();
    m.end_us = j["end_us"].get<Micros>();
    if (m.end_us <= m.start_us) throw ParseError(source, line, "end_us", "must be after start_us");
    if (!j.contains("class")) throw ParseError(source, line, "class", "missing gesture class");
    std::optional<GestureClass> g;
    if (j["class"].is_string()) g = gesture_from_string(j["class"].get<std::string>());
    else if (j["class"].is_number_integer()) g = gesture_from_id(j["class"].get<int>());
    if (!g) throw ParseError(source, line, "class", "unknown gesture class");
    m.gesture = *g;
    marks.push_back(m);
  }
  return marks;
}

inline void write_epoch_sidecar(std::ostream& out, const std::vector<EpochMark>& marks) {
  for (const auto& m : marks) {
    nlohmann::ordered_json j = {{"start_us", m.start_us}, {"end_us", m.end_us},
                                {"class", std::string(to_string(m.gesture))}};
    out << j.dump() << '\n';
  }
}

/// One template per class named in `marks`. Each epoch is the samples in
/// [start_us, end_us), trimmed to `config.epoch_seconds`.
inline std::vector<GestureTemplate> train(const std::vector<ImuSample>& trace, const std::vector<EpochMark>& marks,
                                          const Config& config) {
  if (marks.empty()) throw DataError("train: the epoch sidecar lists no epochs");
  if (trace.empty()) throw DataError("train: the trace is empty");
  const std::size_t max_len = static_cast<std::size_t>(std::llround(config.epoch_seconds * config.sample_rate_hz));
  std::map<GestureClass, std::vector<Epoch>> by_class;
  for (std::size_t k = 0; k < marks.size(); ++k) {
    const auto& m = marks[k];
    if (m.start_us < trace.front().timestamp_us || m.end_us > trace.back().timestamp_us + 1) {
      throw DataError("train: epoch " + std::to_string(k) + " [" + std::to_string(m.start_us) + ", " +
                      std::to_string(m.end_us) + ") us lies outside the trace [" +
                      std::to_string(trace.front().timestamp_us) + ", " + std::to_string(trace.back().timestamp_us) +
                      "] us");
    }
    std::vector<const ImuSample*> picked;
    for (const auto& s : trace) {
      if (s.timestamp_us >= m.start_us && s.timestamp_us < m.end_us && picked.size() < max_len) picked.push_back(&s);
    }
    if (picked.size() < 2) throw DataError("train: epoch " + std::to_string(k) + " holds fewer than 2 samples");
    Signal sig(kMatchChannels, picked.size());
    for (std::size_t i = 0; i < picked.size(); ++i) {
      const auto values = match_channels(*picked[i]);
      for (std::size_t c = 0; c < kMatchChannels; ++c) sig.channels[c][i] = values[c];
    }
    by_class[m.gesture].push_back({std::move(sig), config.sample_rate_hz});
  }
  std::vector<GestureTemplate> out;
  for (auto& [gesture, epochs] : by_class) out.push_back(build_template(gesture, epochs));
  return out;
}

/// A synthetic training session: `repetitions` epochs of each class separated
/// by rest, returned as a trace plus its epoch sidecar.
inline std::pair<std::vector<ImuSample>, std::vector<EpochMark>> synthetic_training_session(
    const std::vector<GestureClass>& classes, int repetitions, double noise_sigma, std::uint64_t seed,
    double sample_rate_hz = kDefaultSampleRateHz) {
  std::vector<ImuSample> trace;
  std::vector<EpochMark> marks;
  std::size_t index = 0;
  std::uint64_t counter = 0;
  auto append = [&](const Epoch& e) {
    for (std::size_t i = 0; i < e.length(); ++i, ++index) {
      ImuSample s;
      s.timestamp_us = sample_offset_us(index, sample_rate_hz);
      for (std::size_t k = 0; k < 3; ++k) {
        s.accel[k] = e.signal.channels[k][i];
        s.gyro[k] = e.signal.channels[3 + k][i];
      }
      trace.push_back(s);
    }
  };
  const auto rest_len = static_cast<std::size_t>(std::llround(0.4 * sample_rate_hz));
  for (GestureClass g : classes) {
    for (int r = 0; r < repetitions; ++r) {
      append(synthesize_rest(rest_len, seed + 7919 * ++counter, noise_sigma, sample_rate_hz));
      const Micros start = sample_offset_us(index, sample_rate_hz);
      const Epoch e = synthesize_gesture(g, seed + 7919 * ++counter, noise_sigma, sample_rate_hz);
      append(e);
      marks.push_back({start, sample_offset_us(index, sample_rate_hz), g});
    }
  }
  append(synthesize_rest(rest_len, seed + 7919 * ++counter, noise_sigma, sample_rate_hz));
  return {std::move(trace), std::move(marks)};
}

}  // namespace wristop
