#pragma once

// Streaming recognition benchmark on the synthetic corpus, shared by the
// gesture tests and the acceptance binary.
//
// Gesture stream: for every trial and class, 0.8 s of rest then one epoch.
// A detection counts toward the epoch whose second half or the 0.4 s after it
// contains the detection time; anything else is a false detection.
// Noise stream: pure rest with the same total duration as all epochs.

#include <array>
#include <cstdint>
#include <vector>

#include "wristop/config.hpp"
#include "wristop/gesture.hpp"
#include "wristop/pipeline.hpp"

namespace eval {

using namespace wristop;

struct RecognitionStats {
  std::array<int, 5> correct{};
  std::array<int, 5> total{};
  int wrong_class{0};
  int false_in_gesture_stream{0};
  int false_in_noise{0};

  double accuracy(GestureClass g) const {
    const auto i = gesture_id(g) - 1;
    return total[i] == 0 ? 0.0 : static_cast<double>(correct[i]) / total[i];
  }
};

inline RecognitionStats evaluate_recognition(const std::vector<GestureTemplate>& templates, int trials, double sigma,
                                             std::uint64_t seed) {
  const Config cfg;
  const double rate = cfg.sample_rate_hz;
  RecognitionStats stats;

  struct Span {
    Micros from, to;
    GestureClass gesture;
    bool hit;
  };
  std::vector<ImuSample> stream;
  std::vector<Span> spans;
  auto append = [&](const Epoch& e) {
    for (std::size_t i = 0; i < e.length(); ++i) {
      ImuSample s;
      s.timestamp_us = sample_offset_us(stream.size(), rate);
      for (std::size_t k = 0; k < 3; ++k) {
        s.accel[k] = e.signal.channels[k][i];
        s.gyro[k] = e.signal.channels[3 + k][i];
      }
      stream.push_back(s);
    }
  };
  const std::size_t rest_len = static_cast<std::size_t>(0.8 * rate);
  std::uint64_t n = 0;
  std::size_t epoch_samples_total = 0;
  for (int t = 0; t < trials; ++t) {
    for (GestureClass g : kAllGestures) {
      append(synthesize_rest(rest_len, seed + 2 * n + 1, sigma, rate));
      const Micros start = sample_offset_us(stream.size(), rate);
      const Epoch e = synthesize_gesture(g, seed + 2 * n + 2, sigma, rate);
      append(e);
      epoch_samples_total += e.length();
      const Micros end = sample_offset_us(stream.size(), rate);
      spans.push_back({start + (end - start) / 2, end + micros_from_seconds(0.4), g, false});
      ++stats.total[gesture_id(g) - 1];
      ++n;
    }
  }
  append(synthesize_rest(rest_len, seed + 2 * n + 1, sigma, rate));

  Recognizer rec(cfg, templates);
  std::size_t next_span = 0;
  for (const auto& s : stream) {
    const auto d = rec.process(s).decision;
    if (!d.gesture) continue;
    while (next_span < spans.size() && spans[next_span].to <= d.timestamp_us) ++next_span;
    if (next_span < spans.size() && spans[next_span].from <= d.timestamp_us && !spans[next_span].hit) {
      spans[next_span].hit = true;
      if (*d.gesture == spans[next_span].gesture) {
        ++stats.correct[gesture_id(*d.gesture) - 1];
      } else {
        ++stats.wrong_class;
      }
    } else {
      ++stats.false_in_gesture_stream;
    }
  }

  // Pure noise of the same duration, fed as one continuous stream.
  Recognizer quiet(cfg, templates);
  const Epoch noise = synthesize_rest(epoch_samples_total, seed ^ 0x5eed5eedull, sigma, rate);
  for (std::size_t i = 0; i < noise.length(); ++i) {
    ImuSample s;
    s.timestamp_us = sample_offset_us(i, rate);
    for (std::size_t k = 0; k < 3; ++k) {
      s.accel[k] = noise.signal.channels[k][i];
      s.gyro[k] = noise.signal.channels[3 + k][i];
    }
    if (quiet.process(s).decision.gesture) ++stats.false_in_noise;
  }
  return stats;
}

}  // namespace eval
