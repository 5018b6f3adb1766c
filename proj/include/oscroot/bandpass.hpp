#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace oscroot {

// Discrete-time IIR filter as transfer-function coefficients, a[0] == 1.
// Designed filters also carry the factored second-order-section cascade
// (rows b0,b1,b2,1,a1,a2); filtering and magnitude evaluation prefer it
// because the expanded polynomials are ill-conditioned for narrow bands.
struct FilterCoefficients {
  std::vector<double> b;
  std::vector<double> a;
  std::vector<std::array<double, 6>> sos;

  std::size_t n_poles() const { return a.size() - 1; }
};

struct BandpassSpec {
  double f_s_hz = 0.0;     // mode frequency the band is centered on
  double f_lo_hz = 0.0;
  double f_hi_hz = 0.0;
  int order = 4;           // analog prototype order (2x discrete poles)
  double retain_frac = 0.65;

  static BandpassSpec around(double f_s_hz, double ratio_lo = 0.9, double ratio_hi = 1.1);
};

// Analog Butterworth prototype -> bandpass transform -> bilinear with
// frequency prewarping. Band edges land exactly at 1/sqrt(2).
FilterCoefficients design_butterworth_bandpass(const BandpassSpec& spec, double dt);

FilterCoefficients design_butterworth_lowpass(double f_cut_hz, double dt, int order = 4);

// |H(e^{j·2π·f·dt})|.
double magnitude_at(const FilterCoefficients& coeffs, double f_hz, double dt);

// Single-pass filtering with initial conditions; exposed for tests.
std::vector<double> lfilter(const FilterCoefficients& coeffs, const std::vector<double>& x,
                            const std::vector<double>& zi);

// Steady-state initial conditions for a unit-amplitude step (per-sample
// scaling happens in filtfilt).
std::vector<double> lfilter_zi(const FilterCoefficients& coeffs);

// Zero-phase forward-backward filtering with odd-symmetric reflection
// padding of 3 x n_poles samples on each side.
std::vector<double> filtfilt(const std::vector<double>& x, const FilterCoefficients& coeffs);

// Centered slice of length round(retain_frac * N); trims differ by at most
// one sample. When dt and f_s_hz are positive the kept span must cover at
// least five periods of f_s_hz.
std::vector<double> retain_center(const std::vector<double>& x, double retain_frac,
                                  double dt = 0.0, double f_s_hz = 0.0);

}  // namespace oscroot
