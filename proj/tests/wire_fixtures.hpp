#pragma once

// Message and byte-stream generators shared by the wire tests and the acceptance binary.

#include <bit>
#include <cmath>
#include <vector>

#include "wristop/random.hpp"
#include "wristop/wire.hpp"

namespace fixtures {

using namespace wristop;
using namespace wristop::wire;
using Bytes = std::vector<std::uint8_t>;

inline float random_float(DeterministicRng& rng) {
  while (true) {
    const float f = std::bit_cast<float>(static_cast<std::uint32_t>(rng.next_u64()));
    if (!std::isnan(f)) return f;
  }
}

inline Message random_message(DeterministicRng& rng) {
  switch (rng.next_u64() % 6) {
    case 0: {
      ImuSampleMsg m;
      m.timestamp_us = rng.next_u64();
      for (auto& f : m.accel) f = random_float(rng);
      for (auto& f : m.gyro) f = random_float(rng);
      if (rng.next_u64() % 2) m.mag = std::array<float, 3>{random_float(rng), random_float(rng), random_float(rng)};
      return m;
    }
    case 1: return VelocityCmdMsg{rng.next_u64(), random_float(rng), random_float(rng)};
    case 2: return GestureAckMsg{static_cast<std::uint8_t>(1 + rng.next_u64() % 5)};
    case 3: return ModeMsg{static_cast<OperationalMode>(rng.next_u64() % 2)};
    case 4: {
      std::string s(rng.next_u64() % 300, '\0');
      for (char& c : s) c = static_cast<char>(rng.next_u64() & 0xff);
      return TelemetryMsg{s};
    }
    default: return HelloMsg{static_cast<Role>(rng.next_u64() % 3)};
  }
}

inline Bytes garbage(DeterministicRng& rng, std::size_t max_len) {
  Bytes g(rng.next_u64() % (max_len + 1));
  for (auto& b : g) {
    // Bias toward magic bytes so partial headers show up often.
    const auto r = rng.next_u64() % 8;
    b = r == 0 ? kMagic0 : r == 1 ? kMagic1 : static_cast<std::uint8_t>(rng.next_u64() & 0xff);
  }
  return g;
}

inline std::vector<Message> drain(StreamDecoder& d) {
  std::vector<Message> out;
  while (auto r = d.next()) {
    if (r->status == DecodeStatus::Ok) out.push_back(*r->message);
  }
  return out;
}

}  // namespace fixtures
