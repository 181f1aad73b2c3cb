#pragma once

// The processing node, as two stages:
//   Recognizer   IMU sample -> orientation estimate + match decision
//   Controller   recognition -> mode events + rate-limited velocity command
// TeleopPipeline chains them for single-threaded use.

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "wristop/command.hpp"
#include "wristop/config.hpp"
#include "wristop/gesture.hpp"
#include "wristop/imu_core.hpp"

namespace wristop {

struct Recognition {
  OrientationEstimate estimate;
  MatchDecision decision;
};

class Recognizer {
 public:
  Recognizer(const Config& config, std::vector<GestureTemplate> templates)
      : settings_(config.match_settings()),
        alpha_(config.filter_alpha),
        templates_(std::move(templates)),
        window_(kMatchChannels, config.window_capacity, config.sample_rate_hz) {
    config.validate();
    for (const auto& t : templates_) {
      const std::string name(to_string(t.gesture));
      if (t.epoch.sample_rate_hz != config.sample_rate_hz) {
        throw DataError("template for " + name + " is sampled at " + std::to_string(t.epoch.sample_rate_hz) +
                        " Hz, pipeline runs at " + std::to_string(config.sample_rate_hz) + " Hz");
      }
      if (t.epoch.channel_count() != kMatchChannels) throw DataError("template for " + name + " must have 6 channels");
      if (t.epoch.length() > config.window_capacity) {
        throw DataError("template for " + name + " is longer than the window");
      }
    }
  }

  /// Throws StaleSample (state unchanged) for a sample not newer than the last.
  Recognition process(const ImuSample& sample) {
    window_.push_sample(sample);
    if (!estimate_) {
      try {
        estimate_ = initial_orientation(sample);
      } catch (const IndeterminateOrientation&) {
        estimate_ = OrientationEstimate{0.0, 0.0, sample.timestamp_us};
      }
    } else {
      const double dt = seconds_from_micros(sample.timestamp_us - estimate_->timestamp_us);
      estimate_ = update_orientation(*estimate_, sample, dt, alpha_);
    }
    Recognition out{*estimate_, match_window(window_, templates_, settings_, last_fire_us_)};
    if (out.decision.gesture) last_fire_us_ = out.decision.timestamp_us;
    return out;
  }

  const std::vector<GestureTemplate>& templates() const { return templates_; }
  std::optional<OrientationEstimate> estimate() const { return estimate_; }

 private:
  MatchSettings settings_;
  double alpha_;
  std::vector<GestureTemplate> templates_;
  SignalWindow window_;
  std::optional<OrientationEstimate> estimate_;
  std::optional<Micros> last_fire_us_;
};

struct ControlOutput {
  OrientationEstimate mapped_from;  // angles handed to map_pose_to_velocity (after mirroring)
  std::vector<ControllerEvent> events;
  std::optional<VelocityCommand> command;
};

class Controller {
 public:
  explicit Controller(const Config& config)
      : mirror_roll_(config.mirror_roll),
        mirror_pitch_(config.mirror_pitch),
        period_us_(static_cast<Micros>(std::llround(1e6 / config.command_rate_hz))) {
    config.validate();
    state_.gains = config.gains();
  }

  /// Commands go out at the command rate, and immediately on entering Autonomous.
  ControlOutput process(const Recognition& in) {
    ControlOutput out;
    const OperationalMode before = state_.mode;
    StepResult step = step_mode(state_, in.decision);
    state_ = step.state;
    out.events = std::move(step.events);

    out.mapped_from = in.estimate;
    if (mirror_roll_) out.mapped_from.roll = -out.mapped_from.roll;
    if (mirror_pitch_) out.mapped_from.pitch = -out.mapped_from.pitch;

    const Micros t = in.estimate.timestamp_us;
    const bool stopped = before != state_.mode && state_.mode == OperationalMode::Autonomous;
    if (!last_command_us_ || t - *last_command_us_ >= period_us_ || stopped) {
      out.command = map_pose_to_velocity(out.mapped_from, state_.gains, state_.mode);
      last_command_us_ = t;
    }
    return out;
  }

  const ControllerState& state() const { return state_; }

 private:
  bool mirror_roll_;
  bool mirror_pitch_;
  Micros period_us_;
  ControllerState state_;
  std::optional<Micros> last_command_us_;
};

struct PipelineOutput {
  OrientationEstimate estimate;     // filter output, before mirroring
  OrientationEstimate mapped_from;  // angles handed to map_pose_to_velocity
  MatchDecision decision;
  std::vector<ControllerEvent> events;
  std::optional<VelocityCommand> command;
};

class TeleopPipeline {
 public:
  TeleopPipeline(const Config& config, std::vector<GestureTemplate> templates)
      : recognizer_(config, std::move(templates)), controller_(config) {}

  PipelineOutput process(const ImuSample& sample) {
    const Recognition rec = recognizer_.process(sample);
    ControlOutput ctl = controller_.process(rec);
    return {rec.estimate, ctl.mapped_from, rec.decision, std::move(ctl.events), ctl.command};
  }

  const ControllerState& state() const { return controller_.state(); }
  std::optional<OrientationEstimate> estimate() const { return recognizer_.estimate(); }

 private:
  Recognizer recognizer_;
  Controller controller_;
};

}  // namespace wristop
