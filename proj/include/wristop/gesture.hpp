#pragma once

// Template-based gesture recognition: Pearson correlation, NCC lag search,
// epoch alignment and averaging, sliding-window matching, and a parametric
// generator that stands in for recorded training data.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wristop/errors.hpp"
#include "wristop/imu_core.hpp"
#include "wristop/random.hpp"
#include "wristop/signal.hpp"

namespace wristop {

/// Numeric ids are part of the wire format.
enum class GestureClass : std::uint8_t { Up = 1, Down = 2, Circle = 3, Left = 4, Right = 5 };

inline constexpr std::array<GestureClass, 5> kAllGestures = {
    GestureClass::Up, GestureClass::Down, GestureClass::Circle, GestureClass::Left,
    GestureClass::Right};

inline constexpr std::uint8_t gesture_id(GestureClass g) { return static_cast<std::uint8_t>(g); }

inline std::optional<GestureClass> gesture_from_id(int id) {
  if (id < 1 || id > 5) return std::nullopt;
  return static_cast<GestureClass>(id);
}

inline std::string_view to_string(GestureClass g) {
  switch (g) {
    case GestureClass::Up: return "Up";
    case GestureClass::Down: return "Down";
    case GestureClass::Circle: return "Circle";
    case GestureClass::Left: return "Left";
    case GestureClass::Right: return "Right";
  }
  return "?";
}

inline std::optional<GestureClass> gesture_from_string(std::string_view name) {
  for (GestureClass g : kAllGestures) {
    if (to_string(g) == name) return g;
  }
  return std::nullopt;
}

inline constexpr double kDefaultThreshold = 0.75;
inline constexpr double kDefaultRefractorySeconds = 1.0;
inline constexpr double kDefaultEpochSeconds = 1.2;
inline constexpr double kDefaultMaxLagSeconds = 0.25;
/// Noise level at which the synthetic corpus is generated for training and
/// recognition checks.
inline constexpr double kCalibratedNoiseSigma = 0.4;

struct Epoch {
  Signal signal;
  double sample_rate_hz{kDefaultSampleRateHz};

  std::size_t length() const { return signal.length(); }
  std::size_t channel_count() const { return signal.channel_count(); }
  bool operator==(const Epoch&) const = default;
};

struct GestureTemplate {
  GestureClass gesture{GestureClass::Up};
  Epoch epoch;
  int training_count{0};

  bool operator==(const GestureTemplate&) const = default;
};

struct MatchDecision {
  std::optional<GestureClass> gesture;
  double score{0.0};
  Micros timestamp_us{0};
};

// ---------------------------------------------------------------------------
// Correlation

namespace detail {

/// Pearson coefficient of two equal-length series; nullopt when either has
/// (numerically) zero variance.
inline std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  if (n < 2 || b.size() != n) return std::nullopt;
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  // Rounding in the mean leaves ~1e-16 relative residue on constant input.
  const auto floor_for = [n](double mean) {
    const double scale = 1e-12 * std::max(1.0, std::abs(mean));
    return static_cast<double>(n) * scale * scale;
  };
  if (saa <= floor_for(mean_a) || sbb <= floor_for(mean_b)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline bool has_degenerate_channel(const Signal& s) {
  for (const auto& ch : s.channels) {
    if (!pearson(ch, ch)) return true;
  }
  return false;
}

/// Mean per-channel correlation between `a[a_begin, a_begin+len)` and
/// `b[b_begin, b_begin+len)`.
inline std::optional<double> multichannel_correlation(const Signal& a, std::size_t a_begin,
                                                      const Signal& b, std::size_t b_begin,
                                                      std::size_t len) {
  double sum = 0.0;
  for (std::size_t c = 0; c < a.channel_count(); ++c) {
    const auto r = pearson(std::span<const double>(a.channels[c]).subspan(a_begin, len),
                           std::span<const double>(b.channels[c]).subspan(b_begin, len));
    if (!r) return std::nullopt;
    sum += *r;
  }
  return sum / static_cast<double>(a.channel_count());
}

}  // namespace detail

/// Unweighted mean of per-channel Pearson coefficients. Throws
/// DegenerateSignal if any channel of either signal is constant.
inline double correlation_coefficient(const Signal& a, const Signal& b) {
  if (a.channel_count() == 0 || a.channel_count() != b.channel_count()) {
    throw ArgumentError("correlation_coefficient: channel counts differ");
  }
  if (a.length() != b.length() || a.length() < 2) {
    throw ArgumentError("correlation_coefficient: signals need equal lengths >= 2");
  }
  const auto r = detail::multichannel_correlation(a, 0, b, 0, a.length());
  if (!r) throw DegenerateSignal("correlation_coefficient: zero-variance channel");
  return *r;
}

struct LagResult {
  int lag{0};
  double peak{0.0};
};

/// Lag in [-max_lag, max_lag] at which `candidate[n + lag]` best lines up with
/// `reference[n]`, judged by the magnitude of the normalized cross-correlation
/// over the overlapping parts. `peak` keeps its sign, so a sign-flipped copy
/// reports lag 0 with peak -1. Ties go to the smallest |lag|, then to the
/// negative lag. Lags whose overlap is degenerate are skipped.
inline LagResult ncc_best_lag(const Signal& reference, const Signal& candidate, std::size_t max_lag) {
  if (reference.channel_count() == 0 || reference.channel_count() != candidate.channel_count()) {
    throw ArgumentError("ncc_best_lag: channel counts differ");
  }
  const std::size_t ref_len = reference.length();
  const std::size_t cand_len = candidate.length();
  if (max_lag >= std::min(ref_len, cand_len)) {
    throw ArgumentError("ncc_best_lag: max_lag must be shorter than both signals");
  }
  if (detail::has_degenerate_channel(reference) || detail::has_degenerate_channel(candidate)) {
    throw DegenerateSignal("ncc_best_lag: constant channel");
  }

  std::optional<LagResult> best;
  const auto consider = [&](long lag) {
    const long begin = std::max(0L, -lag);
    const long end = std::min(static_cast<long>(ref_len), static_cast<long>(cand_len) - lag);
    if (end - begin < 2) return;
    const auto r = detail::multichannel_correlation(
        reference, static_cast<std::size_t>(begin), candidate, static_cast<std::size_t>(begin + lag),
        static_cast<std::size_t>(end - begin));
    if (!r) return;
    if (!best || std::abs(*r) > std::abs(best->peak)) best = LagResult{static_cast<int>(lag), *r};
  };
  consider(0);
  for (long k = 1; k <= static_cast<long>(max_lag); ++k) {
    consider(-k);
    consider(k);
  }
  if (!best) throw DegenerateSignal("ncc_best_lag: no lag with a usable overlap");
  return *best;
}

/// Aligns every epoch to the first one and crops all to the common overlap.
inline std::vector<Epoch> align_epochs(const std::vector<Epoch>& epochs, std::size_t max_lag) {
  if (epochs.empty()) throw ArgumentError("align_epochs: no epochs");
  const std::size_t channels = epochs.front().channel_count();
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (epochs[i].channel_count() != channels || channels == 0) {
      throw ArgumentError("align_epochs: epoch " + std::to_string(i) + " has a different channel count");
    }
    if (epochs[i].length() < 2) {
      throw ArgumentError("align_epochs: epoch " + std::to_string(i) + " is shorter than 2 samples");
    }
    if (detail::has_degenerate_channel(epochs[i].signal)) {
      throw DegenerateSignal("align_epochs: epoch " + std::to_string(i) + " has a constant channel");
    }
  }
  if (epochs.size() == 1) return epochs;

  const Signal& anchor = epochs.front().signal;
  std::vector<long> lags(epochs.size(), 0);
  // Common range in anchor coordinates.
  long lo = 0;
  long hi = static_cast<long>(anchor.length());
  for (std::size_t i = 1; i < epochs.size(); ++i) {
    const std::size_t usable_lag =
        std::min(max_lag, std::min(anchor.length(), epochs[i].length()) - 1);
    try {
      lags[i] = ncc_best_lag(anchor, epochs[i].signal, usable_lag).lag;
    } catch (const DegenerateSignal& e) {
      throw DegenerateSignal("align_epochs: epoch " + std::to_string(i) + ": " + e.what());
    }
    lo = std::max(lo, -lags[i]);
    hi = std::min(hi, static_cast<long>(epochs[i].length()) - lags[i]);
  }
  if (hi - lo < 2) throw DataError("align_epochs: aligned epochs overlap by fewer than 2 samples");

  std::vector<Epoch> out;
  out.reserve(epochs.size());
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    out.push_back({epochs[i].signal.slice(static_cast<std::size_t>(lo + lags[i]),
                                          static_cast<std::size_t>(hi - lo)),
                   epochs[i].sample_rate_hz});
  }
  return out;
}

inline std::size_t default_max_lag(double sample_rate_hz) {
  return static_cast<std::size_t>(std::llround(kDefaultMaxLagSeconds * sample_rate_hz));
}

/// Aligns the epochs and averages them sample by sample.
inline GestureTemplate build_template(GestureClass gesture, const std::vector<Epoch>& epochs,
                                      std::optional<std::size_t> max_lag = std::nullopt) {
  if (epochs.empty()) throw ArgumentError("build_template: no epochs for " + std::string(to_string(gesture)));
  const double rate = epochs.front().sample_rate_hz;
  for (const auto& e : epochs) {
    if (e.sample_rate_hz != rate) throw ArgumentError("build_template: epochs differ in sample rate");
  }
  const auto aligned = align_epochs(epochs, max_lag.value_or(default_max_lag(rate)));

  // Running mean: identical epochs give back the epoch bit for bit.
  Signal mean = aligned.front().signal;
  for (std::size_t k = 1; k < aligned.size(); ++k) {
    const double weight = 1.0 / static_cast<double>(k + 1);
    for (std::size_t c = 0; c < mean.channel_count(); ++c) {
      for (std::size_t i = 0; i < mean.length(); ++i) {
        mean.channels[c][i] += (aligned[k].signal.channels[c][i] - mean.channels[c][i]) * weight;
      }
    }
  }
  return {gesture, {std::move(mean), rate}, static_cast<int>(aligned.size())};
}

struct MatchSettings {
  double threshold{kDefaultThreshold};
  double refractory_s{kDefaultRefractorySeconds};
};

/// Compares the newest slice of the window against every template.
///
/// The best-scoring template fires when its score reaches the threshold and
/// the window end is at least the refractory period past `last_fire_us`.
/// Templates longer than the window and degenerate slices never match.
/// `score` reports the best correlation seen even when nothing fires.
inline MatchDecision match_window(const SignalWindow& window,
                                  std::span<const GestureTemplate> templates,
                                  const MatchSettings& settings,
                                  std::optional<Micros> last_fire_us) {
  if (!(settings.threshold > 0.0 && settings.threshold <= 1.0)) {
    throw ArgumentError("match_window: threshold outside (0, 1]");
  }
  MatchDecision decision;
  decision.timestamp_us = window.newest_timestamp().value_or(0);

  std::optional<GestureClass> best_class;
  std::optional<double> best_score;
  for (const auto& tmpl : templates) {
    const std::size_t len = tmpl.epoch.length();
    if (len < 2 || len > window.size() || tmpl.epoch.channel_count() != window.channel_count()) continue;
    const Signal slice = window.tail(len);
    const auto r = detail::multichannel_correlation(slice, 0, tmpl.epoch.signal, 0, len);
    if (!r) continue;
    const bool better = !best_score || *r > *best_score ||
                        (*r == *best_score && gesture_id(tmpl.gesture) < gesture_id(*best_class));
    if (better) {
      best_score = *r;
      best_class = tmpl.gesture;
    }
  }
  if (!best_score) return decision;
  decision.score = *best_score;

  const bool refractory_ok =
      !last_fire_us ||
      seconds_from_micros(decision.timestamp_us - *last_fire_us) >= settings.refractory_s;
  if (*best_score >= settings.threshold && refractory_ok) decision.gesture = best_class;
  return decision;
}

// ---------------------------------------------------------------------------
// Synthetic gestures
//
// Each class drives all six channels with smooth pulse shapes centred in the
// epoch: G (Gaussian bump), D (biphasic, first derivative of G), M (triphasic,
// second derivative of G), and Hann-windowed sinusoids for Circle. Down and
// Left are exact negations of Up and Right. Up and Right use an even shape
// wherever the other uses an odd one, so their aligned correlation is zero.
// The accelerometer z channel carries gravity (watch face up).

namespace synth {

inline constexpr double kPulseWidthS = 0.12;
inline constexpr double kCirclePeriodS = 0.6;
inline constexpr double kPrimaryAccel = 6.0;
inline constexpr double kPrimaryGyro = 4.0;
inline constexpr double kSecondary = 2.5;

struct Shapes {
  double g, d, m, s1, c1, s2, c2;
};

inline Shapes shapes_at(double t, double duration) {
  const double u = (t - duration / 2.0) / kPulseWidthS;
  const double g = std::exp(-0.5 * u * u);
  const double hann = std::pow(std::sin(std::numbers::pi * t / duration), 2);
  const double w1 = 2.0 * std::numbers::pi / kCirclePeriodS;
  const double w2 = 2.0 * w1;
  return {g,
          -u * g * std::exp(0.5),
          (1.0 - u * u) * g,
          std::sin(w1 * t) * hann,
          std::cos(w1 * t) * hann,
          std::sin(w2 * t) * hann,
          std::cos(w2 * t) * hann};
}

/// Noise-free channel values (ax, ay, az, gx, gy, gz) at time t, without gravity.
inline std::array<double, kMatchChannels> clean_values(GestureClass g, double t, double duration) {
  const Shapes s = shapes_at(t, duration);
  const std::array<double, kMatchChannels> up = {kSecondary * s.m, kSecondary * s.g,
                                                 kPrimaryAccel * s.d, kSecondary * s.d,
                                                 kPrimaryGyro * s.g, kSecondary * s.d};
  const std::array<double, kMatchChannels> right = {kSecondary * s.d, kPrimaryAccel * s.d,
                                                    kSecondary * s.m, kSecondary * s.m,
                                                    kSecondary * s.d, kPrimaryGyro * s.g};
  const std::array<double, kMatchChannels> circle = {kSecondary * s.s1, kSecondary * s.c1,
                                                     kSecondary * s.s2, kPrimaryGyro * s.s1,
                                                     kPrimaryGyro * s.c1, kSecondary * s.c2};
  auto negated = [](std::array<double, kMatchChannels> v) {
    for (double& x : v) x = -x;
    return v;
  };
  switch (g) {
    case GestureClass::Up: return up;
    case GestureClass::Down: return negated(up);
    case GestureClass::Circle: return circle;
    case GestureClass::Left: return negated(right);
    case GestureClass::Right: return right;
  }
  return {};
}

inline std::size_t sample_count(double duration_s, double sample_rate_hz) {
  return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
}

}  // namespace synth

/// Deterministic synthetic repetition of `gesture`: the clean waveform plus
/// white Gaussian noise of `noise_sigma` on every channel, drawn from `seed`.
inline Epoch synthesize_gesture(GestureClass gesture, std::uint64_t seed, double noise_sigma,
                                double sample_rate_hz = kDefaultSampleRateHz,
                                double duration_s = kDefaultEpochSeconds) {
  if (noise_sigma < 0.0) throw ArgumentError("synthesize_gesture: noise sigma must be >= 0");
  if (!(sample_rate_hz > 0.0) || !(duration_s > 0.0)) {
    throw ArgumentError("synthesize_gesture: rate and duration must be positive");
  }
  const std::size_t n = synth::sample_count(duration_s, sample_rate_hz);
  Signal sig(kMatchChannels, n);
  DeterministicRng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    const auto values = synth::clean_values(gesture, t, duration_s);
    for (std::size_t c = 0; c < kMatchChannels; ++c) {
      double v = values[c] + (c == 2 ? kGravity : 0.0);
      if (noise_sigma > 0.0) v += noise_sigma * rng.normal();
      sig.channels[c][i] = v;
    }
  }
  return {std::move(sig), sample_rate_hz};
}

/// A motionless, face-up wrist: gravity on z plus white noise.
inline Epoch synthesize_rest(std::size_t length, std::uint64_t seed, double noise_sigma,
                             double sample_rate_hz = kDefaultSampleRateHz) {
  Signal sig(kMatchChannels, length);
  DeterministicRng rng(seed);
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t c = 0; c < kMatchChannels; ++c) {
      double v = c == 2 ? kGravity : 0.0;
      if (noise_sigma > 0.0) v += noise_sigma * rng.normal();
      sig.channels[c][i] = v;
    }
  }
  return {std::move(sig), sample_rate_hz};
}

inline Micros sample_offset_us(std::size_t index, double sample_rate_hz) {
  return static_cast<Micros>(std::llround(static_cast<double>(index) * 1e6 / sample_rate_hz));
}

/// Expands a six-channel epoch into timestamped samples starting at `start_us`.
inline std::vector<ImuSample> epoch_samples(const Epoch& epoch, Micros start_us) {
  if (epoch.channel_count() != kMatchChannels) throw ArgumentError("epoch_samples: need 6 channels");
  std::vector<ImuSample> out(epoch.length());
  for (std::size_t i = 0; i < epoch.length(); ++i) {
    out[i].timestamp_us = start_us + sample_offset_us(i, epoch.sample_rate_hz);
    for (std::size_t k = 0; k < 3; ++k) {
      out[i].accel[k] = epoch.signal.channels[k][i];
      out[i].gyro[k] = epoch.signal.channels[3 + k][i];
    }
  }
  return out;
}

/// Templates trained from the synthetic corpus: `repetitions` noisy
/// repetitions per class, aligned and averaged.
inline std::vector<GestureTemplate> synthetic_templates(int repetitions = 60,
                                                        double noise_sigma = kCalibratedNoiseSigma,
                                                        std::uint64_t base_seed = 0x7e3a11,
                                                        double sample_rate_hz = kDefaultSampleRateHz) {
  std::vector<GestureTemplate> out;
  for (GestureClass g : kAllGestures) {
    std::vector<Epoch> epochs;
    for (int i = 0; i < repetitions; ++i) {
      const std::uint64_t seed = base_seed + 1000u * gesture_id(g) + static_cast<std::uint64_t>(i);
      epochs.push_back(synthesize_gesture(g, seed, noise_sigma, sample_rate_hz));
    }
    out.push_back(build_template(g, epochs));
  }
  return out;
}

}  // namespace wristop
