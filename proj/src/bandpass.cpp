#include "oscroot/bandpass.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>

#include <Eigen/Dense>

#include "oscroot/errors.hpp"

namespace oscroot {

namespace {

using cplx = std::complex<double>;

struct Zpk {
  std::vector<cplx> z;
  std::vector<cplx> p;
  double k = 1.0;
};

// Unit-cutoff analog lowpass prototype: poles uniformly on the left unit
// semicircle, no zeros, unit gain.
Zpk butter_prototype(int order) {
  Zpk proto;
  proto.p.reserve(static_cast<std::size_t>(order));
  for (int m = 0; m < order; ++m) {
    const double phi = std::numbers::pi * (2.0 * m + 1.0) / (2.0 * order);
    proto.p.emplace_back(-std::sin(phi), std::cos(phi));
  }
  return proto;
}

Zpk lp2lp(const Zpk& lp, double w_c) {
  Zpk out;
  for (const cplx& z : lp.z) out.z.push_back(w_c * z);
  for (const cplx& p : lp.p) out.p.push_back(w_c * p);
  const auto degree = static_cast<int>(lp.p.size() - lp.z.size());
  out.k = lp.k * std::pow(w_c, degree);
  return out;
}

Zpk lp2bp(const Zpk& lp, double w0, double bw) {
  Zpk out;
  const auto degree = static_cast<int>(lp.p.size() - lp.z.size());
  auto split = [&](const cplx& root) {
    const cplx s = root * (bw / 2.0);
    const cplx d = std::sqrt(s * s - w0 * w0);
    return std::pair<cplx, cplx>{s + d, s - d};
  };
  for (const cplx& z : lp.z) {
    const auto [hi, lo] = split(z);
    out.z.push_back(hi);
    out.z.push_back(lo);
  }
  for (const cplx& p : lp.p) {
    const auto [hi, lo] = split(p);
    out.p.push_back(hi);
    out.p.push_back(lo);
  }
  out.z.insert(out.z.end(), static_cast<std::size_t>(degree), cplx{0.0, 0.0});
  out.k = lp.k * std::pow(bw, degree);
  return out;
}

// Bilinear transform; fs2 = 2/dt. Analog roots at infinity land at z = -1.
Zpk bilinear(const Zpk& analog, double fs2) {
  Zpk out;
  const auto degree = static_cast<int>(analog.p.size() - analog.z.size());
  cplx num{1.0, 0.0}, den{1.0, 0.0};
  for (const cplx& z : analog.z) {
    out.z.push_back((fs2 + z) / (fs2 - z));
    num *= fs2 - z;
  }
  for (const cplx& p : analog.p) {
    out.p.push_back((fs2 + p) / (fs2 - p));
    den *= fs2 - p;
  }
  out.z.insert(out.z.end(), static_cast<std::size_t>(degree), cplx{-1.0, 0.0});
  out.k = analog.k * (num / den).real();
  return out;
}

std::vector<double> poly_from_roots(const std::vector<cplx>& roots) {
  std::vector<cplx> c{cplx{1.0, 0.0}};
  for (const cplx& r : roots) {
    std::vector<cplx> next(c.size() + 1, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= c[i] * r;
    }
    c = std::move(next);
  }
  std::vector<double> real(c.size());
  std::transform(c.begin(), c.end(), real.begin(), [](const cplx& v) { return v.real(); });
  return real;
}

FilterCoefficients zpk_to_tf(const Zpk& zpk) {
  FilterCoefficients coeffs;
  coeffs.b = poly_from_roots(zpk.z);
  for (double& v : coeffs.b) v *= zpk.k;
  coeffs.a = poly_from_roots(zpk.p);
  return coeffs;
}

// Group conjugate pairs (and leftover reals) into second-order sections.
// Designed zeros here are real (+1/-1 after the bilinear transform); each
// two-pole section draws one zero from each distinct location while both
// remain, keeping the per-section numerators balanced.
std::vector<std::array<double, 6>> zpk_to_sos(const Zpk& zpk) {
  constexpr double kImagTol = 1e-9;

  std::vector<cplx> pair_leads;   // one representative per conjugate pair
  std::vector<double> real_poles;
  for (const cplx& p : zpk.p) {
    if (p.imag() > kImagTol * std::abs(p)) pair_leads.push_back(p);
    else if (std::abs(p.imag()) <= kImagTol * std::abs(p)) real_poles.push_back(p.real());
  }
  std::sort(pair_leads.begin(), pair_leads.end(),
            [](const cplx& a, const cplx& b) { return std::abs(a) > std::abs(b); });
  std::sort(real_poles.begin(), real_poles.end(), std::greater<>());

  // bucket the (real) zeros by location
  std::vector<std::pair<double, int>> zero_groups;  // value, remaining count
  for (const cplx& z : zpk.z) {
    bool found = false;
    for (auto& [value, count] : zero_groups) {
      if (std::abs(z.real() - value) < 1e-9) {
        ++count;
        found = true;
        break;
      }
    }
    if (!found) zero_groups.emplace_back(z.real(), 1);
  }
  auto take_zero = [&](std::size_t skip_of) -> std::optional<double> {
    for (std::size_t g = 0; g < zero_groups.size(); ++g) {
      if (g != skip_of && zero_groups[g].second > 0) {
        --zero_groups[g].second;
        return zero_groups[g].first;
      }
    }
    if (skip_of < zero_groups.size() && zero_groups[skip_of].second > 0) {
      --zero_groups[skip_of].second;
      return zero_groups[skip_of].first;
    }
    return std::nullopt;
  };

  std::vector<std::array<double, 6>> sos;
  for (const cplx& p : pair_leads) {
    std::array<double, 6> row{1.0, 0.0, 0.0, 1.0, -2.0 * p.real(), std::norm(p)};
    if (auto z1 = take_zero(zero_groups.size())) {
      std::size_t g1 = 0;
      while (g1 < zero_groups.size() && std::abs(zero_groups[g1].first - *z1) >= 1e-9) ++g1;
      if (auto z2 = take_zero(g1)) {
        row[1] = -(*z1 + *z2);
        row[2] = *z1 * *z2;
      } else {
        row[0] = 0.0;  // single zero: numerator degree 1
        row[1] = 1.0;
        row[2] = -*z1;
      }
    }
    sos.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    std::array<double, 6> row{1.0, 0.0, 0.0, 1.0, -(real_poles[i] + real_poles[i + 1]),
                              real_poles[i] * real_poles[i + 1]};
    if (auto z1 = take_zero(zero_groups.size())) {
      if (auto z2 = take_zero(zero_groups.size())) {
        row[1] = -(*z1 + *z2);
        row[2] = *z1 * *z2;
      } else {
        row[0] = 0.0;
        row[1] = 1.0;
        row[2] = -*z1;
      }
    }
    sos.push_back(row);
  }
  if (real_poles.size() % 2 == 1) {
    std::array<double, 6> row{1.0, 0.0, 0.0, 1.0, -real_poles.back(), 0.0};
    if (auto z1 = take_zero(zero_groups.size())) row[1] = -*z1;
    sos.push_back(row);
  }

  // spread the overall gain across sections for dynamic range
  const double mag = std::pow(std::abs(zpk.k), 1.0 / static_cast<double>(sos.size()));
  double lead = zpk.k < 0.0 ? -mag : mag;
  for (auto& row : sos) {
    for (int i = 0; i < 3; ++i) row[static_cast<std::size_t>(i)] *= lead;
    lead = mag;
  }
  // most resonant section last, so intermediate signals stay tame
  std::reverse(sos.begin(), sos.begin() + static_cast<std::ptrdiff_t>(pair_leads.size()));
  return sos;
}

double prewarp(double f_hz, double dt) {
  return (2.0 / dt) * std::tan(std::numbers::pi * f_hz * dt);
}

void check_band(double f_lo, double f_hi, double dt, int order) {
  if (!(dt > 0.0)) throw Error(ErrorKind::config, "configuration: dt must be positive");
  if (order < 1) throw Error(ErrorKind::config, "configuration: filter order must be >= 1");
  const double nyquist = 0.5 / dt;
  if (!(f_lo > 0.0) || !(f_hi > f_lo)) {
    throw Error(ErrorKind::config, "configuration: band edges must satisfy 0 < f_lo < f_hi");
  }
  if (f_hi >= nyquist) {
    throw Error(ErrorKind::config,
                "configuration: upper cutoff reaches Nyquist; raise the sampling rate or "
                "narrow the band");
  }
}

}  // namespace

BandpassSpec BandpassSpec::around(double f_s_hz, double ratio_lo, double ratio_hi) {
  BandpassSpec spec;
  spec.f_s_hz = f_s_hz;
  spec.f_lo_hz = ratio_lo * f_s_hz;
  spec.f_hi_hz = ratio_hi * f_s_hz;
  return spec;
}

FilterCoefficients design_butterworth_bandpass(const BandpassSpec& spec, double dt) {
  check_band(spec.f_lo_hz, spec.f_hi_hz, dt, spec.order);
  const double w_lo = prewarp(spec.f_lo_hz, dt);
  const double w_hi = prewarp(spec.f_hi_hz, dt);
  const Zpk proto = butter_prototype(spec.order);
  const Zpk analog = lp2bp(proto, std::sqrt(w_lo * w_hi), w_hi - w_lo);
  const Zpk digital = bilinear(analog, 2.0 / dt);
  FilterCoefficients coeffs = zpk_to_tf(digital);
  coeffs.sos = zpk_to_sos(digital);
  return coeffs;
}

FilterCoefficients design_butterworth_lowpass(double f_cut_hz, double dt, int order) {
  if (!(dt > 0.0)) throw Error(ErrorKind::config, "configuration: dt must be positive");
  if (order < 1) throw Error(ErrorKind::config, "configuration: filter order must be >= 1");
  if (!(f_cut_hz > 0.0) || f_cut_hz >= 0.5 / dt) {
    throw Error(ErrorKind::config, "configuration: lowpass cutoff must lie in (0, Nyquist)");
  }
  const Zpk proto = butter_prototype(order);
  const Zpk analog = lp2lp(proto, prewarp(f_cut_hz, dt));
  const Zpk digital = bilinear(analog, 2.0 / dt);
  FilterCoefficients coeffs = zpk_to_tf(digital);
  coeffs.sos = zpk_to_sos(digital);
  return coeffs;
}

double magnitude_at(const FilterCoefficients& coeffs, double f_hz, double dt) {
  const cplx zinv = std::exp(cplx{0.0, -2.0 * std::numbers::pi * f_hz * dt});
  if (!coeffs.sos.empty()) {
    double mag = 1.0;
    for (const auto& s : coeffs.sos) {
      const cplx num = s[0] + s[1] * zinv + s[2] * zinv * zinv;
      const cplx den = s[3] + s[4] * zinv + s[5] * zinv * zinv;
      mag *= std::abs(num / den);
    }
    return mag;
  }
  cplx num{0.0, 0.0}, den{0.0, 0.0};
  cplx zk{1.0, 0.0};
  const std::size_t n = std::max(coeffs.b.size(), coeffs.a.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (k < coeffs.b.size()) num += coeffs.b[k] * zk;
    if (k < coeffs.a.size()) den += coeffs.a[k] * zk;
    zk *= zinv;
  }
  return std::abs(num / den);
}

std::vector<double> lfilter(const FilterCoefficients& coeffs, const std::vector<double>& x,
                            const std::vector<double>& zi) {
  const std::size_t n = std::max(coeffs.b.size(), coeffs.a.size());
  std::vector<double> b = coeffs.b, a = coeffs.a;
  b.resize(n, 0.0);
  a.resize(n, 0.0);
  std::vector<double> z = zi;
  z.resize(n - 1, 0.0);

  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double yi = b[0] * x[i] + (n > 1 ? z[0] : 0.0);
    for (std::size_t k = 0; k + 2 < n; ++k) {
      z[k] = b[k + 1] * x[i] + z[k + 1] - a[k + 1] * yi;
    }
    if (n > 1) z[n - 2] = b[n - 1] * x[i] - a[n - 1] * yi;
    y[i] = yi;
  }
  return y;
}

std::vector<double> lfilter_zi(const FilterCoefficients& coeffs) {
  const std::size_t n = std::max(coeffs.b.size(), coeffs.a.size());
  std::vector<double> b = coeffs.b, a = coeffs.a;
  b.resize(n, 0.0);
  a.resize(n, 0.0);
  const auto m = static_cast<Eigen::Index>(n - 1);
  if (m == 0) return {};

  // Steady state of the transposed direct-form II delay line:
  // z = C^T z + (b[1:] - a[1:] b[0]) with C the companion matrix of a.
  Eigen::MatrixXd i_minus_a = Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    i_minus_a(i, 0) += a[static_cast<std::size_t>(i) + 1];
    if (i + 1 < m) i_minus_a(i, i + 1) -= 1.0;
    rhs(i) = b[static_cast<std::size_t>(i) + 1] - a[static_cast<std::size_t>(i) + 1] * b[0];
  }
  const Eigen::VectorXd zi = i_minus_a.partialPivLu().solve(rhs);
  return {zi.data(), zi.data() + m};
}

namespace {

// Cascade of transposed direct-form II biquads; zi holds two states per
// section and is left at the final state.
std::vector<double> sosfilt(const std::vector<std::array<double, 6>>& sos,
                            std::vector<double> x, std::vector<std::array<double, 2>>& zi) {
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto& c = sos[s];
    double w1 = zi[s][0], w2 = zi[s][1];
    for (double& u : x) {
      const double y = c[0] * u + w1;
      w1 = c[1] * u - c[4] * y + w2;
      w2 = c[2] * u - c[5] * y;
      u = y;
    }
    zi[s] = {w1, w2};
  }
  return x;
}

// Per-section steady-state response to a unit step, each section scaled by
// the DC gain of the sections before it.
std::vector<std::array<double, 2>> sosfilt_zi(const std::vector<std::array<double, 6>>& sos) {
  std::vector<std::array<double, 2>> zi(sos.size());
  double scale = 1.0;
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto& c = sos[s];
    FilterCoefficients biquad{{c[0], c[1], c[2]}, {c[3], c[4], c[5]}, {}};
    const std::vector<double> section_zi = lfilter_zi(biquad);
    zi[s] = {scale * section_zi[0], scale * section_zi[1]};
    scale *= (c[0] + c[1] + c[2]) / (c[3] + c[4] + c[5]);
  }
  return zi;
}

}  // namespace

std::vector<double> filtfilt(const std::vector<double>& x, const FilterCoefficients& coeffs) {
  const std::size_t n_poles =
      coeffs.sos.empty() ? coeffs.n_poles() : 2 * coeffs.sos.size();
  const std::size_t padlen = 3 * n_poles;
  if (x.size() <= padlen) {
    throw Error(ErrorKind::data_quality,
                "insufficient-data: signal length " + std::to_string(x.size()) +
                    " does not exceed the filter padding of " + std::to_string(padlen));
  }

  // Odd-symmetric reflection about the end samples.
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * padlen);
  for (std::size_t k = padlen; k >= 1; --k) ext.push_back(2.0 * x.front() - x[k]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t k = 1; k <= padlen; ++k) ext.push_back(2.0 * x.back() - x[x.size() - 1 - k]);

  std::vector<double> y;
  if (!coeffs.sos.empty()) {
    const auto zi = sosfilt_zi(coeffs.sos);
    auto scaled = [&](double x0) {
      auto z = zi;
      for (auto& pair : z)
        for (double& v : pair) v *= x0;
      return z;
    };
    auto z_fwd = scaled(ext.front());
    y = sosfilt(coeffs.sos, std::move(ext), z_fwd);
    std::reverse(y.begin(), y.end());
    auto z_bwd = scaled(y.front());
    y = sosfilt(coeffs.sos, std::move(y), z_bwd);
    std::reverse(y.begin(), y.end());
  } else {
    const std::vector<double> zi = lfilter_zi(coeffs);
    auto scaled = [&](double x0) {
      std::vector<double> z = zi;
      for (double& v : z) v *= x0;
      return z;
    };
    y = lfilter(coeffs, ext, scaled(ext.front()));
    std::reverse(y.begin(), y.end());
    y = lfilter(coeffs, y, scaled(y.front()));
    std::reverse(y.begin(), y.end());
  }

  return {y.begin() + static_cast<std::ptrdiff_t>(padlen),
          y.end() - static_cast<std::ptrdiff_t>(padlen)};
}

std::vector<double> retain_center(const std::vector<double>& x, double retain_frac, double dt,
                                  double f_s_hz) {
  if (!(retain_frac >= 0.5 && retain_frac <= 0.8)) {
    throw Error(ErrorKind::config, "configuration: retain_frac must lie in [0.5, 0.8]");
  }
  const auto n = x.size();
  auto keep = static_cast<std::size_t>(std::llround(retain_frac * static_cast<double>(n)));
  keep = std::min(keep, n);
  const std::size_t trim_left = (n - keep) / 2;

  if (dt > 0.0 && f_s_hz > 0.0) {
    const double duration = static_cast<double>(keep) * dt;
    if (duration < 5.0 / f_s_hz) {
      throw Error(ErrorKind::data_quality,
                  "insufficient-data: retained window covers fewer than five periods of the "
                  "target mode");
    }
  }
  return {x.begin() + static_cast<std::ptrdiff_t>(trim_left),
          x.begin() + static_cast<std::ptrdiff_t>(trim_left + keep)};
}

}  // namespace oscroot
