#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace oscroot {

enum class SampleQuality { good, bad, missing };

// One PMU reporting instant: voltage/current phasors plus a quality flag.
struct PhasorRecord {
  double t = 0.0;        // seconds
  double v = 0.0;        // voltage magnitude (per-unit or volts), >= 0 when good
  double theta_v = 0.0;  // voltage angle, radians
  double i = 0.0;        // current magnitude, >= 0 when good
  double theta_i = 0.0;  // current angle, radians
  SampleQuality quality = SampleQuality::good;
};

enum class ChannelKind { P, Q };

const char* to_string(ChannelKind kind);

struct ChannelLabel {
  std::string plant;
  ChannelKind kind = ChannelKind::P;

  bool operator==(const ChannelLabel&) const = default;
};

struct Channel {
  ChannelLabel label;
  std::vector<double> samples;
};

// Pre-clean channel data: a shared (possibly jittered) time axis with one
// value per channel per instant. NaN marks a bad, missing, or empty sample.
struct RawChannels {
  std::vector<double> t;
  std::vector<Channel> channels;
};

// Uniformly sampled, finite, equal-length observable channels grouped by plant.
struct ChannelSet {
  double dt = 0.0;  // sampling interval, seconds
  double t0 = 0.0;  // time of the first sample, seconds
  std::vector<Channel> channels;

  std::size_t length() const { return channels.empty() ? 0 : channels.front().samples.size(); }
  double duration() const { return length() < 2 ? 0.0 : static_cast<double>(length() - 1) * dt; }
  double nyquist_hz() const { return dt > 0.0 ? 0.5 / dt : 0.0; }

  // Unique plant ids in order of first appearance.
  std::vector<std::string> plants() const;

  // Throws Error on violated invariants (empty, unequal lengths, non-finite
  // samples, non-positive dt).
  void validate() const;
};

}  // namespace oscroot
