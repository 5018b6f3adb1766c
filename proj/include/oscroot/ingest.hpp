#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "oscroot/types.hpp"

namespace oscroot {

struct CleanConfig {
  double outlier_mad_factor = 6.0;  // |x - median| > factor * MAD on the detrended channel
  int max_gap_samples = 5;          // longer runs of repaired samples are a data-quality error
  double max_removed_frac = 0.20;   // per channel, before repair
  double jitter_tol = 0.01;         // fraction of nominal dt: snap below, resample above
};

// P = V*I*cos(theta_V - theta_I), Q = V*I*sin(theta_V - theta_I).
// Throws a rejected-sample error (with the record index) on non-finite or
// negative-magnitude input.
std::pair<double, double> compute_pq(const PhasorRecord& rec, std::size_t record_index = 0);

// Pivot per-plant phasor rows onto a shared time axis of P/Q channels.
// Bad or missing-quality samples, and instants where a plant has no row,
// become NaN for the plant's channels.
RawChannels phasor_to_raw(const std::map<std::string, std::vector<PhasorRecord>>& records);

// Outlier/missing-sample repair plus resampling onto a strict uniform grid.
ChannelSet clean(const RawChannels& raw, const CleanConfig& cfg = {});

// Zero-phase Butterworth low-pass on every channel (4th order).
ChannelSet lowpass_denoise(const ChannelSet& cs, double f_cut_hz);

// Subtract the per-channel least-squares line over the sample index.
ChannelSet detrend(const ChannelSet& cs);

}  // namespace oscroot
