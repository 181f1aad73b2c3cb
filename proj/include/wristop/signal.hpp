#pragma once

#include <cstddef>
#include <vector>

#include "wristop/errors.hpp"

namespace wristop {

/// Channel-major multi-channel signal; every channel has the same length.
struct Signal {
  std::vector<std::vector<double>> channels;

  Signal() = default;
  explicit Signal(std::vector<std::vector<double>> data) : channels(std::move(data)) {
    for (const auto& ch : channels) {
      if (ch.size() != channels.front().size()) throw ArgumentError("signal channels differ in length");
    }
  }
  Signal(std::size_t channel_count, std::size_t length)
      : channels(channel_count, std::vector<double>(length, 0.0)) {}

  std::size_t channel_count() const { return channels.size(); }
  std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }

  Signal slice(std::size_t begin, std::size_t count) const {
    if (begin + count > length()) throw ArgumentError("signal slice out of range");
    Signal out(channel_count(), count);
    for (std::size_t c = 0; c < channel_count(); ++c) {
      for (std::size_t i = 0; i < count; ++i) out.channels[c][i] = channels[c][begin + i];
    }
    return out;
  }

  bool operator==(const Signal&) const = default;
};

}  // namespace wristop
