#pragma once

// Frame codec and routing rules for the operator -> processing -> robot link.
//
// Frame layout (all integers little-endian):
//
//   offset  size  field
//   0       2     magic 0x57 0x50 ("WP")
//   2       1     version (0x01)
//   3       1     kind
//   4       4     payload length N (u32)
//   8       N     payload
//   8+N     4     CRC-32/IEEE over kind, length and payload
//
// Payloads:
//   0x01 ImuSample   u64 t_us, f32 ax ay az gx gy gz mx my mz (absent mag = NaN x3)
//   0x02 VelocityCmd u64 t_us, f32 v, f32 omega
//   0x03 GestureAck  u8 gesture id (1-5)
//   0x04 Mode        u8 (0 Autonomous, 1 Teleoperated)
//   0x05 Telemetry   UTF-8 JSON snapshot
//   0x06 Hello       u8 role (0 operator, 1 robot, 2 viewer)

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wristop/command.hpp"
#include "wristop/errors.hpp"
#include "wristop/gesture.hpp"

namespace wristop::wire {

inline constexpr std::uint8_t kMagic0 = 0x57;
inline constexpr std::uint8_t kMagic1 = 0x50;
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 8;
inline constexpr std::size_t kTrailerSize = 4;
inline constexpr std::uint32_t kMaxPayload = 1u << 20;

enum class Kind : std::uint8_t {
  ImuSample = 0x01,
  VelocityCmd = 0x02,
  GestureAck = 0x03,
  Mode = 0x04,
  Telemetry = 0x05,
  Hello = 0x06,
};

enum class Role : std::uint8_t { Operator = 0, Robot = 1, Viewer = 2 };

struct ImuSampleMsg {
  std::uint64_t timestamp_us{0};
  std::array<float, 3> accel{};
  std::array<float, 3> gyro{};
  std::optional<std::array<float, 3>> mag;
  bool operator==(const ImuSampleMsg&) const = default;
};

struct VelocityCmdMsg {
  std::uint64_t timestamp_us{0};
  float v{0.0f};
  float omega{0.0f};
  bool operator==(const VelocityCmdMsg&) const = default;
};

struct GestureAckMsg {
  std::uint8_t gesture_id{1};
  bool operator==(const GestureAckMsg&) const = default;
};

struct ModeMsg {
  OperationalMode mode{OperationalMode::Autonomous};
  bool operator==(const ModeMsg&) const = default;
};

struct TelemetryMsg {
  std::string snapshot;
  bool operator==(const TelemetryMsg&) const = default;
};

struct HelloMsg {
  Role role{Role::Operator};
  bool operator==(const HelloMsg&) const = default;
};

using Message = std::variant<ImuSampleMsg, VelocityCmdMsg, GestureAckMsg, ModeMsg, TelemetryMsg, HelloMsg>;

inline Kind kind_of(const Message& m) {
  static constexpr std::array<Kind, 6> kinds = {Kind::ImuSample, Kind::VelocityCmd, Kind::GestureAck,
                                                Kind::Mode,      Kind::Telemetry,   Kind::Hello};
  return kinds[m.index()];
}

// ---------------------------------------------------------------------------
// CRC-32/IEEE (reflected polynomial 0xEDB88320, init and xorout 0xFFFFFFFF)

namespace detail {

inline constexpr std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

inline constexpr auto kCrcTable = make_crc_table();

}  // namespace detail

class Crc32 {
 public:
  void update(std::span<const std::uint8_t> bytes) {
    for (std::uint8_t b : bytes) state_ = detail::kCrcTable[(state_ ^ b) & 0xFFu] ^ (state_ >> 8);
  }
  std::uint32_t value() const { return state_ ^ 0xFFFFFFFFu; }

 private:
  std::uint32_t state_{0xFFFFFFFFu};
};

inline std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  Crc32 c;
  c.update(bytes);
  return c.value();
}

// ---------------------------------------------------------------------------
// Little-endian helpers

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return v;
}

inline float get_f32(std::span<const std::uint8_t> in, std::size_t at) {
  return std::bit_cast<float>(get_u32(in, at));
}

struct PayloadWriter {
  std::vector<std::uint8_t>& out;

  void operator()(const ImuSampleMsg& m) const {
    put_u64(out, m.timestamp_us);
    for (float f : m.accel) put_f32(out, f);
    for (float f : m.gyro) put_f32(out, f);
    if (m.mag) {
      for (float f : *m.mag) {
        if (std::isnan(f)) throw EncodeError("encode: magnetometer value is NaN (reserved for 'absent')");
        put_f32(out, f);
      }
    } else {
      for (int i = 0; i < 3; ++i) put_f32(out, std::numeric_limits<float>::quiet_NaN());
    }
  }
  void operator()(const VelocityCmdMsg& m) const {
    put_u64(out, m.timestamp_us);
    put_f32(out, m.v);
    put_f32(out, m.omega);
  }
  void operator()(const GestureAckMsg& m) const {
    if (!gesture_from_id(m.gesture_id)) {
      throw EncodeError("encode: gesture id " + std::to_string(m.gesture_id) + " outside 1-5");
    }
    out.push_back(m.gesture_id);
  }
  void operator()(const ModeMsg& m) const {
    if (m.mode != OperationalMode::Autonomous && m.mode != OperationalMode::Teleoperated) {
      throw EncodeError("encode: unknown mode");
    }
    out.push_back(static_cast<std::uint8_t>(m.mode));
  }
  void operator()(const TelemetryMsg& m) const {
    if (m.snapshot.size() > kMaxPayload) throw EncodeError("encode: telemetry snapshot too large");
    out.insert(out.end(), m.snapshot.begin(), m.snapshot.end());
  }
  void operator()(const HelloMsg& m) const {
    if (static_cast<std::uint8_t>(m.role) > 2) throw EncodeError("encode: unknown role");
    out.push_back(static_cast<std::uint8_t>(m.role));
  }
};

}  // namespace detail

/// Serializes one message into a complete frame. Throws EncodeError for
/// values outside the message invariants.
inline std::vector<std::uint8_t> encode(const Message& msg) {
  std::vector<std::uint8_t> payload;
  std::visit(detail::PayloadWriter{payload}, msg);

  std::vector<std::uint8_t> frame;
  frame.reserve(kHeaderSize + payload.size() + kTrailerSize);
  frame.push_back(kMagic0);
  frame.push_back(kMagic1);
  frame.push_back(kVersion);
  frame.push_back(static_cast<std::uint8_t>(kind_of(msg)));
  detail::put_u32(frame, static_cast<std::uint32_t>(payload.size()));
  frame.insert(frame.end(), payload.begin(), payload.end());
  detail::put_u32(frame, crc32(std::span<const std::uint8_t>(frame).subspan(3)));
  return frame;
}

enum class DecodeStatus {
  Ok,
  Incomplete,       // need more bytes; `consumed` covers only skipped garbage
  Corrupt,          // CRC mismatch, bad version, oversize or malformed payload
  UnsupportedKind,  // CRC valid but kind unknown; whole frame consumed
};

struct DecodeResult {
  DecodeStatus status{DecodeStatus::Incomplete};
  std::optional<Message> message;
  std::size_t consumed{0};
  std::uint8_t kind{0};
  std::string detail;
};

namespace detail {

inline std::optional<Message> parse_payload(std::uint8_t kind, std::span<const std::uint8_t> p,
                                            std::string& why) {
  auto expect = [&](std::size_t n) {
    if (p.size() != n) {
      why = "payload length " + std::to_string(p.size()) + " does not match kind " + std::to_string(kind);
      return false;
    }
    return true;
  };
  switch (static_cast<Kind>(kind)) {
    case Kind::ImuSample: {
      if (!expect(44)) return std::nullopt;
      ImuSampleMsg m;
      m.timestamp_us = get_u64(p, 0);
      for (int i = 0; i < 3; ++i) m.accel[i] = get_f32(p, 8 + 4 * i);
      for (int i = 0; i < 3; ++i) m.gyro[i] = get_f32(p, 20 + 4 * i);
      std::array<float, 3> mag{};
      for (int i = 0; i < 3; ++i) mag[i] = get_f32(p, 32 + 4 * i);
      if (!(std::isnan(mag[0]) && std::isnan(mag[1]) && std::isnan(mag[2]))) m.mag = mag;
      return m;
    }
    case Kind::VelocityCmd: {
      if (!expect(16)) return std::nullopt;
      return VelocityCmdMsg{get_u64(p, 0), get_f32(p, 8), get_f32(p, 12)};
    }
    case Kind::GestureAck: {
      if (!expect(1)) return std::nullopt;
      if (!gesture_from_id(p[0])) {
        why = "gesture id outside 1-5";
        return std::nullopt;
      }
      return GestureAckMsg{p[0]};
    }
    case Kind::Mode: {
      if (!expect(1)) return std::nullopt;
      if (p[0] > 1) {
        why = "mode byte outside 0-1";
        return std::nullopt;
      }
      return ModeMsg{static_cast<OperationalMode>(p[0])};
    }
    case Kind::Telemetry: return TelemetryMsg{std::string(p.begin(), p.end())};
    case Kind::Hello: {
      if (!expect(1)) return std::nullopt;
      if (p[0] > 2) {
        why = "role byte outside 0-2";
        return std::nullopt;
      }
      return HelloMsg{static_cast<Role>(p[0])};
    }
  }
  return std::nullopt;
}

inline bool known_kind(std::uint8_t k) { return k >= 0x01 && k <= 0x06; }

}  // namespace detail

/// Decodes the first frame in `stream`.
///
/// Leading bytes that cannot start a frame are skipped (resynchronisation on
/// the magic pair) and counted in `consumed`. A corrupt frame consumes only
/// its magic pair so the scan can restart inside it.
inline DecodeResult decode(std::span<const std::uint8_t> stream) {
  DecodeResult r;
  std::size_t start = 0;
  while (start < stream.size()) {
    if (stream[start] == kMagic0 && (start + 1 == stream.size() || stream[start + 1] == kMagic1)) break;
    ++start;
  }
  r.consumed = start;
  const auto rest = stream.subspan(start);
  if (rest.size() < kHeaderSize) return r;  // Incomplete

  r.kind = rest[3];
  if (rest[2] != kVersion) {
    r.status = DecodeStatus::Corrupt;
    r.detail = "unsupported version " + std::to_string(rest[2]);
    r.consumed = start + 2;
    return r;
  }
  const std::uint32_t length = detail::get_u32(rest, 4);
  if (length > kMaxPayload) {
    r.status = DecodeStatus::Corrupt;
    r.detail = "payload length " + std::to_string(length) + " exceeds limit";
    r.consumed = start + 2;
    return r;
  }
  const std::size_t total = kHeaderSize + length + kTrailerSize;
  if (rest.size() < total) return r;  // Incomplete

  const std::uint32_t expected = detail::get_u32(rest, kHeaderSize + length);
  const std::uint32_t actual = crc32(rest.subspan(3, 5 + length));
  if (expected != actual) {
    r.status = DecodeStatus::Corrupt;
    r.detail = "CRC mismatch";
    r.consumed = start + 2;
    return r;
  }
  if (!detail::known_kind(r.kind)) {
    r.status = DecodeStatus::UnsupportedKind;
    r.detail = "unsupported kind " + std::to_string(r.kind);
    r.consumed = start + total;
    return r;
  }
  std::string why;
  auto msg = detail::parse_payload(r.kind, rest.subspan(kHeaderSize, length), why);
  if (!msg) {
    r.status = DecodeStatus::Corrupt;
    r.detail = why;
    r.consumed = start + total;
    return r;
  }
  r.status = DecodeStatus::Ok;
  r.message = std::move(msg);
  r.consumed = start + total;
  return r;
}

/// Incremental decoder for a byte stream: feed chunks, pull messages.
/// Corrupt frames are counted and skipped; unsupported kinds are reported.
class StreamDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes) { buffer_.insert(buffer_.end(), bytes.begin(), bytes.end()); }

  /// Next complete result other than Incomplete, or nullopt when more bytes are needed.
  std::optional<DecodeResult> next() {
    while (true) {
      DecodeResult r = decode(buffer_);
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(r.consumed));
      if (r.status == DecodeStatus::Incomplete) return std::nullopt;
      if (r.status == DecodeStatus::Corrupt) {
        ++corrupt_frames_;
        continue;
      }
      return r;
    }
  }

  std::size_t buffered() const { return buffer_.size(); }
  std::size_t corrupt_frames() const { return corrupt_frames_; }

 private:
  std::vector<std::uint8_t> buffer_;
  std::size_t corrupt_frames_{0};
};

// ---------------------------------------------------------------------------
// Routing

/// Parties on the link. `Pipeline` is the processing node itself (never a
/// remote peer); the simulator publishes as `Robot`.
enum class Party : std::uint8_t { Operator, Robot, Viewer, Pipeline };

inline Party party_of(Role r) {
  switch (r) {
    case Role::Operator: return Party::Operator;
    case Role::Robot: return Party::Robot;
    case Role::Viewer: return Party::Viewer;
  }
  return Party::Viewer;
}

struct Destinations {
  bool pipeline{false};
  bool robot{false};
  bool operator_{false};
  bool viewers{false};

  bool operator==(const Destinations&) const = default;
};

/// Where a message from `sender` goes. `sender` is empty until the peer has
/// said Hello. Throws ProtocolError for anything the role may not send.
inline Destinations route(std::optional<Party> sender, Kind kind) {
  auto violation = [&](const char* why) {
    return ProtocolError(std::string("protocol violation: ") + why + " (kind " +
                         std::to_string(static_cast<int>(kind)) + ")");
  };
  if (!sender) {
    if (kind == Kind::Hello) return {};
    throw violation("message before Hello");
  }
  if (kind == Kind::Hello) {
    if (*sender == Party::Pipeline) throw violation("pipeline does not say Hello");
    throw violation("repeated Hello");
  }
  switch (*sender) {
    case Party::Operator:
      if (kind == Kind::ImuSample) return {.pipeline = true};
      throw violation("operator may only send IMU samples");
    case Party::Robot:
      if (kind == Kind::Telemetry) return {.operator_ = true, .viewers = true};
      throw violation("robot may only send telemetry");
    case Party::Viewer:
      throw violation("viewer may not send");
    case Party::Pipeline:
      switch (kind) {
        case Kind::VelocityCmd: return {.robot = true};
        case Kind::GestureAck: return {.operator_ = true};
        case Kind::Mode: return {.operator_ = true, .viewers = true};
        case Kind::Telemetry: return {.operator_ = true, .viewers = true};
        default: throw violation("pipeline cannot emit this kind");
      }
  }
  throw violation("unknown sender");
}

// ---------------------------------------------------------------------------
// Conversions between domain types and messages

inline ImuSampleMsg to_message(const ImuSample& s) {
  ImuSampleMsg m;
  m.timestamp_us = static_cast<std::uint64_t>(s.timestamp_us);
  for (int i = 0; i < 3; ++i) {
    m.accel[i] = static_cast<float>(s.accel[i]);
    m.gyro[i] = static_cast<float>(s.gyro[i]);
  }
  if (s.mag) m.mag = std::array<float, 3>{static_cast<float>((*s.mag)[0]), static_cast<float>((*s.mag)[1]),
                                          static_cast<float>((*s.mag)[2])};
  return m;
}

inline ImuSample from_message(const ImuSampleMsg& m) {
  ImuSample s;
  s.timestamp_us = static_cast<Micros>(m.timestamp_us);
  for (int i = 0; i < 3; ++i) {
    s.accel[i] = m.accel[i];
    s.gyro[i] = m.gyro[i];
  }
  if (m.mag) s.mag = Vec3{(*m.mag)[0], (*m.mag)[1], (*m.mag)[2]};
  return s;
}

inline VelocityCmdMsg to_message(const VelocityCommand& c) {
  return {static_cast<std::uint64_t>(c.timestamp_us), static_cast<float>(c.v), static_cast<float>(c.omega)};
}

}  // namespace wristop::wire
