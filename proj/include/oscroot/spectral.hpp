#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "oscroot/types.hpp"

namespace oscroot {

struct Spectrum {
  std::vector<double> freqs_hz;  // freqs[k] = k / (N * dt)
  std::vector<double> mags;
};

struct ModeCandidate {
  double f_s_hz = 0.0;
  double amplitude = 0.0;
  double window_start_s = 0.0;
  double window_end_s = 0.0;
  std::optional<double> harmonic_of_hz;
};

// One-sided amplitude spectrum of the Hann-windowed signal. Calibration:
// interior bins scaled by 2/sum(w), DC and Nyquist by 1/sum(w), so a
// unit-amplitude bin-centered sinusoid reads ~1. Requires length >= 8.
Spectrum spectrum(const std::vector<double>& x, double dt);

// Per-bin maximum across all channels; a mode visible anywhere survives.
Spectrum aggregate_spectrum(const ChannelSet& cs);

// Local maxima of the aggregated spectrum above threshold_rel of the global
// peak (and above a noise gate of 10x the spectral median), merged when
// closer than one bin, quadratic-interpolated, harmonics flagged. Sorted by
// descending amplitude. Empty list when nothing qualifies.
std::vector<ModeCandidate> dominant_modes(const ChannelSet& cs, double threshold_rel = 0.3);

// Honor a valid requested window verbatim; otherwise pick the span where
// band-limited energy of the top mode concentrates, extended to cover at
// least five periods of the slowest dominant mode.
std::pair<double, double> select_window(const ChannelSet& cs,
                                        const std::vector<ModeCandidate>& modes,
                                        std::optional<std::pair<double, double>> requested = {});

}  // namespace oscroot
