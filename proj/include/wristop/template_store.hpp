#pragma once

// Template store: one JSON document per gesture set.
//
//   {"format": "wristop-templates/1", "sample_rate_hz": 50, "channel_count": 6,
//    "templates": [{"class_id": 3, "class": "Circle", "training_count": 60,
//                   "samples": [[ax, ay, az, gx, gy, gz], ...]}]}
//
// Samples are row-major (one row per time step).

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wristop/errors.hpp"
#include "wristop/gesture.hpp"

namespace wristop {

inline constexpr const char* kTemplateFormat = "wristop-templates/1";

inline nlohmann::ordered_json templates_to_json(const std::vector<GestureTemplate>& templates) {
  if (templates.empty()) throw ArgumentError("template store: nothing to save");
  const double rate = templates.front().epoch.sample_rate_hz;
  const std::size_t channels = templates.front().epoch.channel_count();
  nlohmann::ordered_json doc;
  doc["format"] = kTemplateFormat;
  doc["sample_rate_hz"] = rate;
  doc["channel_count"] = channels;
  auto& list = doc["templates"] = nlohmann::ordered_json::array();
  for (const auto& t : templates) {
    if (t.epoch.sample_rate_hz != rate || t.epoch.channel_count() != channels) {
      throw ArgumentError("template store: templates disagree on sample rate or channel count");
    }
    nlohmann::ordered_json entry;
    entry["class_id"] = gesture_id(t.gesture);
    entry["class"] = std::string(to_string(t.gesture));
    entry["training_count"] = t.training_count;
    auto& rows = entry["samples"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < t.epoch.length(); ++i) {
      auto row = nlohmann::ordered_json::array();
      for (std::size_t c = 0; c < channels; ++c) row.push_back(t.epoch.signal.channels[c][i]);
      rows.push_back(std::move(row));
    }
    list.push_back(std::move(entry));
  }
  return doc;
}

inline std::vector<GestureTemplate> templates_from_json(const nlohmann::json& doc,
                                                        const std::string& source = {}) {
  auto fail = [&](const std::string& field, const std::string& what) -> ParseError {
    return ParseError(source, 0, field, what);
  };
  if (!doc.is_object()) throw fail("", "expected a JSON object");
  if (doc.value("format", std::string{}) != kTemplateFormat) {
    throw fail("format", std::string("expected '") + kTemplateFormat + "'");
  }
  if (!doc.contains("sample_rate_hz") || !doc["sample_rate_hz"].is_number() ||
      !(doc["sample_rate_hz"].get<double>() > 0.0)) {
    throw fail("sample_rate_hz", "expected a positive number");
  }
  if (!doc.contains("channel_count") || !doc["channel_count"].is_number_unsigned() ||
      doc["channel_count"].get<std::size_t>() == 0) {
    throw fail("channel_count", "expected a positive integer");
  }
  if (!doc.contains("templates") || !doc["templates"].is_array()) throw fail("templates", "expected an array");

  const double rate = doc["sample_rate_hz"].get<double>();
  const std::size_t channels = doc["channel_count"].get<std::size_t>();
  std::vector<GestureTemplate> out;
  for (std::size_t k = 0; k < doc["templates"].size(); ++k) {
    const auto& entry = doc["templates"][k];
    const std::string where = "templates[" + std::to_string(k) + "]";
    if (!entry.is_object()) throw fail(where, "expected an object");
    if (!entry.contains("class_id") || !entry["class_id"].is_number_integer()) {
      throw fail(where + ".class_id", "expected an integer");
    }
    const auto gesture = gesture_from_id(entry["class_id"].get<int>());
    if (!gesture) throw fail(where + ".class_id", "gesture id must be 1-5");
    if (!entry.contains("training_count") || !entry["training_count"].is_number_integer() ||
        entry["training_count"].get<int>() < 1) {
      throw fail(where + ".training_count", "expected an integer >= 1");
    }
    if (!entry.contains("samples") || !entry["samples"].is_array() || entry["samples"].size() < 2) {
      throw fail(where + ".samples", "expected at least 2 rows");
    }
    const auto& rows = entry["samples"];
    Signal sig(channels, rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].is_array() || rows[i].size() != channels) {
        throw fail(where + ".samples[" + std::to_string(i) + "]",
                   "expected " + std::to_string(channels) + " values");
      }
      for (std::size_t c = 0; c < channels; ++c) {
        if (!rows[i][c].is_number()) {
          throw fail(where + ".samples[" + std::to_string(i) + "]", "expected numbers");
        }
        sig.channels[c][i] = rows[i][c].get<double>();
      }
    }
    out.push_back({*gesture, {std::move(sig), rate}, entry["training_count"].get<int>()});
  }
  if (out.empty()) throw fail("templates", "no templates");
  return out;
}

inline void save_templates(std::ostream& out, const std::vector<GestureTemplate>& templates) {
  out << templates_to_json(templates).dump(1) << '\n';
}

inline std::vector<GestureTemplate> load_templates(std::istream& in, const std::string& source = {}) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 0, "", e.what());
  }
  return templates_from_json(doc, source);
}

inline std::vector<GestureTemplate> load_templates_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open template store '" + path + "'");
  return load_templates(in, path);
}

}  // namespace wristop
