#include "oscroot/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <fftw3.h>

#include "oscroot/bandpass.hpp"
#include "oscroot/errors.hpp"

namespace oscroot {

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

// Quadratic vertex through (k-1, k, k+1); offset clamped to half a bin.
struct RefinedPeak {
  double offset = 0.0;
  double amplitude = 0.0;
};

RefinedPeak refine_peak(double m_lo, double m0, double m_hi) {
  const double denom = 2.0 * m0 - m_lo - m_hi;
  RefinedPeak out{0.0, m0};
  if (denom > 0.0) {
    out.offset = std::clamp(0.5 * (m_hi - m_lo) / denom, -0.5, 0.5);
    out.amplitude = m0 + 0.25 * (m_hi - m_lo) * out.offset;
  }
  return out;
}

}  // namespace

Spectrum spectrum(const std::vector<double>& x, double dt) {
  const std::size_t n = x.size();
  if (n < 8) {
    throw Error(ErrorKind::data_quality,
                "insufficient-data: spectrum needs at least 8 samples, got " + std::to_string(n));
  }
  if (!(dt > 0.0)) throw Error(ErrorKind::config, "configuration: dt must be positive");

  std::vector<double> windowed(n);
  double sum_w = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n)));
    windowed[k] = x[k] * w;
    sum_w += w;
  }

  const std::size_t n_bins = n / 2 + 1;
  std::vector<std::complex<double>> out(n_bins);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), windowed.data(),
                                        reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  Spectrum spec;
  spec.freqs_hz.resize(n_bins);
  spec.mags.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    spec.freqs_hz[k] = static_cast<double>(k) / (static_cast<double>(n) * dt);
    const bool single_sided_edge = (k == 0) || (n % 2 == 0 && k == n / 2);
    spec.mags[k] = std::abs(out[k]) * (single_sided_edge ? 1.0 : 2.0) / sum_w;
  }
  return spec;
}

Spectrum aggregate_spectrum(const ChannelSet& cs) {
  cs.validate();
  Spectrum agg;
  for (const auto& ch : cs.channels) {
    Spectrum s = spectrum(ch.samples, cs.dt);
    if (agg.mags.empty()) {
      agg = std::move(s);
    } else {
      for (std::size_t k = 0; k < agg.mags.size(); ++k) {
        agg.mags[k] = std::max(agg.mags[k], s.mags[k]);
      }
    }
  }
  return agg;
}

std::vector<ModeCandidate> dominant_modes(const ChannelSet& cs, double threshold_rel) {
  if (!(threshold_rel > 0.0 && threshold_rel <= 1.0)) {
    throw Error(ErrorKind::config, "configuration: threshold_rel must lie in (0, 1]");
  }
  const Spectrum agg = aggregate_spectrum(cs);
  const std::size_t n_bins = agg.mags.size();
  const double bin_width = agg.freqs_hz[1] - agg.freqs_hz[0];
  const double nyquist = cs.nyquist_hz();

  double global_max = 0.0;
  for (std::size_t k = 1; k < n_bins; ++k) global_max = std::max(global_max, agg.mags[k]);
  if (global_max <= 0.0) return {};

  // Gate against broadband noise: a real spectral line towers over the
  // median leakage/noise floor; pure noise never clears 10x its own median.
  const double noise_gate =
      10.0 * median_of({agg.mags.begin() + 1, agg.mags.end()});
  const double floor = std::max(threshold_rel * global_max, noise_gate);

  struct RawPeak {
    double f, amp;
  };
  std::vector<RawPeak> peaks;
  for (std::size_t k = 1; k + 1 < n_bins; ++k) {
    if (agg.mags[k] < floor) continue;
    if (!(agg.mags[k] > agg.mags[k - 1] && agg.mags[k] >= agg.mags[k + 1])) continue;
    const RefinedPeak rp = refine_peak(agg.mags[k - 1], agg.mags[k], agg.mags[k + 1]);
    const double f = (static_cast<double>(k) + rp.offset) * bin_width;
    if (f > 0.0 && f < nyquist) peaks.push_back({f, rp.amplitude});
  }

  // Merge refined peaks that collapsed onto the same line.
  std::sort(peaks.begin(), peaks.end(), [](const RawPeak& a, const RawPeak& b) { return a.f < b.f; });
  std::vector<RawPeak> merged;
  for (const RawPeak& p : peaks) {
    if (!merged.empty() && p.f - merged.back().f < bin_width) {
      if (p.amp > merged.back().amp) merged.back() = p;
    } else {
      merged.push_back(p);
    }
  }

  std::vector<ModeCandidate> modes;
  modes.reserve(merged.size());
  const double span_start = cs.t0;
  const double span_end = cs.t0 + cs.duration();
  for (const RawPeak& p : merged) {
    ModeCandidate mc;
    mc.f_s_hz = p.f;
    mc.amplitude = p.amp;
    mc.window_start_s = span_start;
    mc.window_end_s = span_end;
    // Flag f ~ n*f0 (n >= 2) of the lowest qualifying detected peak.
    for (const RawPeak& base : merged) {
      if (base.f >= p.f) break;
      const double ratio = p.f / base.f;
      const auto harmonic_n = std::llround(ratio);
      if (harmonic_n >= 2 && std::fabs(p.f - static_cast<double>(harmonic_n) * base.f) <= 0.02 * p.f) {
        mc.harmonic_of_hz = base.f;
        break;
      }
    }
    modes.push_back(std::move(mc));
  }

  std::sort(modes.begin(), modes.end(),
            [](const ModeCandidate& a, const ModeCandidate& b) { return a.amplitude > b.amplitude; });
  return modes;
}

std::pair<double, double> select_window(const ChannelSet& cs,
                                        const std::vector<ModeCandidate>& modes,
                                        std::optional<std::pair<double, double>> requested) {
  cs.validate();
  if (modes.empty()) {
    throw Error(ErrorKind::no_dominant_mode, "no-dominant-mode: nothing to window");
  }
  double min_fs = modes.front().f_s_hz;
  for (const auto& m : modes) min_fs = std::min(min_fs, m.f_s_hz);
  const double need = 5.0 / min_fs;
  const double t_begin = cs.t0;
  const double t_end = cs.t0 + cs.duration();
  if (t_end - t_begin < need - 1e-9) {
    throw Error(ErrorKind::data_quality,
                "insufficient-data: record shorter than five periods of the slowest dominant "
                "mode");
  }

  if (requested) {
    const auto [a, b] = *requested;
    const bool valid =
        a < b && a >= t_begin - 1e-9 && b <= t_end + 1e-9 && (b - a) >= need - 1e-9;
    if (valid) return *requested;
  }

  // Locate where the dominant mode's band-limited energy lives.
  const ModeCandidate* top = nullptr;
  for (const auto& m : modes) {
    if (!m.harmonic_of_hz) {
      top = &m;
      break;
    }
  }
  if (top == nullptr) top = &modes.front();

  const std::size_t n = cs.length();
  std::vector<double> energy(n, 0.0);
  try {
    const FilterCoefficients coeffs =
        design_butterworth_bandpass(BandpassSpec::around(top->f_s_hz), cs.dt);
    if (n <= 3 * coeffs.n_poles()) return {t_begin, t_end};
    for (const auto& ch : cs.channels) {
      const std::vector<double> z = filtfilt(ch.samples, coeffs);
      for (std::size_t k = 0; k < n; ++k) energy[k] += z[k] * z[k];
    }
  } catch (const Error&) {
    return {t_begin, t_end};  // band unfilterable at this rate: keep everything
  }

  // Smooth over one period so the envelope, not the carrier, drives the span.
  const auto half = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(0.5 / (top->f_s_hz * cs.dt))));
  std::vector<double> smooth(n, 0.0);
  double acc = 0.0;
  std::size_t lo = 0, hi = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t want_hi = std::min(n, k + half + 1);
    while (hi < want_hi) acc += energy[hi++];
    const std::size_t want_lo = k > half ? k - half : 0;
    while (lo < want_lo) acc -= energy[lo++];
    smooth[k] = acc / static_cast<double>(hi - lo);
  }

  const double peak = *std::max_element(smooth.begin(), smooth.end());
  if (!(peak > 0.0)) return {t_begin, t_end};
  const double gate = 0.10 * peak;
  std::size_t first = 0, last = n - 1;
  while (first < n && smooth[first] < gate) ++first;
  while (last > first && smooth[last] < gate) --last;

  // Grow symmetrically until the five-period rule is met.
  const auto need_samples = static_cast<std::size_t>(std::ceil(need / cs.dt));
  while (last - first < need_samples && (first > 0 || last + 1 < n)) {
    if (first > 0) --first;
    if (last - first < need_samples && last + 1 < n) ++last;
  }
  return {t_begin + static_cast<double>(first) * cs.dt, t_begin + static_cast<double>(last) * cs.dt};
}

}  // namespace oscroot
