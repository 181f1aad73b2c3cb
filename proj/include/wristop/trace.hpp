#pragma once

// Line-oriented trace files: one JSON object per line with fields
// t_us, ax, ay, az, gx, gy, gz and optionally mx, my, mz.

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wristop/errors.hpp"
#include "wristop/imu_core.hpp"

namespace wristop {

namespace detail {

inline double require_number(const nlohmann::json& obj, const char* key, const std::string& source,
                             std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(source, line, key, "missing field");
  if (!it->is_number()) throw ParseError(source, line, key, "expected a number");
  const double value = it->get<double>();
  if (!std::isfinite(value)) throw ParseError(source, line, key, "value is not finite");
  return value;
}

inline nlohmann::json parse_json_line(std::string_view text, const std::string& source,
                                      std::size_t line) {
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ParseError(source, line, "", "expected a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, line, "", e.what());
  }
}

inline bool is_blank(std::string_view text) {
  return text.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace detail

inline ImuSample parse_trace_line(std::string_view text, const std::string& source = {},
                                  std::size_t line = 0) {
  static constexpr std::string_view kKnown[] = {"t_us", "ax", "ay", "az", "gx",
                                                "gy",   "gz", "mx", "my", "mz"};
  const auto j = detail::parse_json_line(text, source, line);
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw ParseError(source, line, key, "unknown field");
    }
  }
  const auto t = j.find("t_us");
  if (t == j.end()) throw ParseError(source, line, "t_us", "missing field");
  if (!t->is_number_integer()) throw ParseError(source, line, "t_us", "expected an integer");

  ImuSample s;
  s.timestamp_us = t->get<Micros>();
  s.accel = {detail::require_number(j, "ax", source, line), detail::require_number(j, "ay", source, line),
             detail::require_number(j, "az", source, line)};
  s.gyro = {detail::require_number(j, "gx", source, line), detail::require_number(j, "gy", source, line),
            detail::require_number(j, "gz", source, line)};
  const int mag_fields = static_cast<int>(j.contains("mx")) + static_cast<int>(j.contains("my")) +
                         static_cast<int>(j.contains("mz"));
  if (mag_fields == 3) {
    s.mag = Vec3{detail::require_number(j, "mx", source, line),
                 detail::require_number(j, "my", source, line),
                 detail::require_number(j, "mz", source, line)};
  } else if (mag_fields != 0) {
    throw ParseError(source, line, "mx", "magnetometer needs all of mx, my, mz");
  }
  return s;
}

inline std::string format_trace_line(const ImuSample& s) {
  nlohmann::ordered_json j;
  j["t_us"] = s.timestamp_us;
  j["ax"] = s.accel[0];
  j["ay"] = s.accel[1];
  j["az"] = s.accel[2];
  j["gx"] = s.gyro[0];
  j["gy"] = s.gyro[1];
  j["gz"] = s.gyro[2];
  if (s.mag) {
    j["mx"] = (*s.mag)[0];
    j["my"] = (*s.mag)[1];
    j["mz"] = (*s.mag)[2];
  }
  return j.dump();
}

/// Reads a whole trace; blank lines are skipped. Timestamps must be strictly
/// increasing.
inline std::vector<ImuSample> read_trace(std::istream& in, const std::string& source = {}) {
  std::vector<ImuSample> samples;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (detail::is_blank(text)) continue;
    ImuSample s = parse_trace_line(text, source, line);
    if (!samples.empty() && s.timestamp_us <= samples.back().timestamp_us) {
      throw ParseError(source, line, "t_us", "timestamps must be strictly increasing");
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

inline void write_trace(std::ostream& out, const std::vector<ImuSample>& samples) {
  for (const auto& s : samples) out << format_trace_line(s) << '\n';
}

}  // namespace wristop
