#include "oscroot/types.hpp"

#include <cmath>

#include "oscroot/errors.hpp"

namespace oscroot {

const char* to_string(ChannelKind kind) {
  return kind == ChannelKind::P ? "P" : "Q";
}

std::vector<std::string> ChannelSet::plants() const {
  std::vector<std::string> out;
  for (const auto& ch : channels) {
    bool seen = false;
    for (const auto& p : out) {
      if (p == ch.label.plant) {
        seen = true;
        break;
      }
    }
    if (!seen) out.push_back(ch.label.plant);
  }
  return out;
}

void ChannelSet::validate() const {
  if (dt <= 0.0 || !std::isfinite(dt)) {
    throw Error(ErrorKind::config, "channel set: sampling interval must be positive");
  }
  if (channels.empty()) {
    throw Error(ErrorKind::data_quality, "channel set: no channels");
  }
  const std::size_t n = channels.front().samples.size();
  if (n < 2) {
    throw Error(ErrorKind::data_quality, "channel set: fewer than 2 samples per channel");
  }
  for (const auto& ch : channels) {
    if (ch.samples.size() != n) {
      throw Error(ErrorKind::data_quality,
                  "channel set: unequal channel lengths (" + ch.label.plant + ")");
    }
    for (double v : ch.samples) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::data_quality,
                    "channel set: non-finite sample in channel " + ch.label.plant + ":" +
                        to_string(ch.label.kind));
      }
    }
  }
}

}  // namespace oscroot
