#pragma once

// Runtime configuration (JSON). Every key is optional; unknown keys are errors.
//
//   {"v_max": 0.7, "omega_max": 1.0, "mirror_roll": false, "mirror_pitch": false,
//    "command_rate_hz": 50, "gesture_threshold": 0.75, "refractory_s": 1.0,
//    "sample_rate_hz": 50, "filter_alpha": 0.98, "window_capacity": 128,
//    "epoch_seconds": 1.2}

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "wristop/command.hpp"
#include "wristop/errors.hpp"
#include "wristop/gesture.hpp"
#include "wristop/imu_core.hpp"

namespace wristop {

struct Config {
  double v_max{kDefaultMaxLinear};
  double omega_max{kDefaultMaxAngular};
  bool mirror_roll{false};   // left-wrist wear
  bool mirror_pitch{false};
  double command_rate_hz{kDefaultSampleRateHz};
  double gesture_threshold{kDefaultThreshold};
  double refractory_s{kDefaultRefractorySeconds};
  double sample_rate_hz{kDefaultSampleRateHz};
  double filter_alpha{kDefaultFilterAlpha};
  std::size_t window_capacity{128};
  double epoch_seconds{kDefaultEpochSeconds};

  GainConfig gains() const { return make_gains(v_max, omega_max); }
  MatchSettings match_settings() const { return {gesture_threshold, refractory_s}; }

  void validate() const {
    make_gains(v_max, omega_max);
    if (!(command_rate_hz > 0.0)) throw ArgumentError("config: command_rate_hz must be positive");
    if (!(gesture_threshold > 0.0 && gesture_threshold <= 1.0)) {
      throw ArgumentError("config: gesture_threshold must be in (0, 1]");
    }
    if (!(refractory_s >= 0.0)) throw ArgumentError("config: refractory_s must be >= 0");
    if (!(sample_rate_hz > 0.0)) throw ArgumentError("config: sample_rate_hz must be positive");
    if (!(filter_alpha >= 0.0 && filter_alpha <= 1.0)) throw ArgumentError("config: filter_alpha must be in [0, 1]");
    if (window_capacity < 2) throw ArgumentError("config: window_capacity must be >= 2");
    if (!(epoch_seconds > 0.0)) throw ArgumentError("config: epoch_seconds must be positive");
  }
};

inline Config config_from_json(const nlohmann::json& doc, const std::string& source = {}) {
  if (!doc.is_object()) throw ParseError(source, 0, "", "config must be a JSON object");
  Config cfg;
  auto number = [&](double& slot) {
    return [&slot, &source](const std::string& key, const nlohmann::json& v) {
      if (!v.is_number()) throw ParseError(source, 0, key, "expected a number");
      slot = v.get<double>();
    };
  };
  auto flag = [&](bool& slot) {
    return [&slot, &source](const std::string& key, const nlohmann::json& v) {
      if (!v.is_boolean()) throw ParseError(source, 0, key, "expected true or false");
      slot = v.get<bool>();
    };
  };
  const std::map<std::string, std::function<void(const std::string&, const nlohmann::json&)>> setters = {
      {"v_max", number(cfg.v_max)},
      {"omega_max", number(cfg.omega_max)},
      {"mirror_roll", flag(cfg.mirror_roll)},
      {"mirror_pitch", flag(cfg.mirror_pitch)},
      {"command_rate_hz", number(cfg.command_rate_hz)},
      {"gesture_threshold", number(cfg.gesture_threshold)},
      {"refractory_s", number(cfg.refractory_s)},
      {"sample_rate_hz", number(cfg.sample_rate_hz)},
      {"filter_alpha", number(cfg.filter_alpha)},
      {"window_capacity",
       [&cfg, &source](const std::string& key, const nlohmann::json& v) {
         if (!v.is_number_unsigned()) throw ParseError(source, 0, key, "expected a positive integer");
         cfg.window_capacity = v.get<std::size_t>();
       }},
      {"epoch_seconds", number(cfg.epoch_seconds)},
  };
  for (const auto& [key, value] : doc.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ParseError(source, 0, key, "unknown configuration key");
    it->second(key, value);
  }
  try {
    cfg.validate();
  } catch (const ArgumentError& e) {
    throw ParseError(source, 0, "", e.what());
  }
  return cfg;
}

inline Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return config_from_json(nlohmann::json::parse(buffer.str()), path);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, 0, "", e.what());
  }
}

}  // namespace wristop
