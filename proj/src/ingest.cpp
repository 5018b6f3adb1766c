#include "oscroot/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oscroot/bandpass.hpp"
#include "oscroot/errors.hpp"

namespace oscroot {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> v) {
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

// Least-squares line over the sample index, fitted on finite samples only.
// Returns {slope, intercept}.
std::pair<double, double> fit_line(const std::vector<double>& x) {
  double sk = 0.0, sx = 0.0, skk = 0.0, skx = 0.0, n = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k])) continue;
    const double kk = static_cast<double>(k);
    sk += kk;
    sx += x[k];
    skk += kk * kk;
    skx += kk * x[k];
    n += 1.0;
  }
  if (n < 2.0) return {0.0, n > 0.0 ? sx / n : 0.0};
  const double det = n * skk - sk * sk;
  if (det == 0.0) return {0.0, sx / n};
  return {(n * skx - sk * sx) / det, (skk * sx - sk * skx) / det};
}

// Mark |residual - median| > factor * MAD samples as NaN. MAD gets an
// absolute floor so constant channels do not flag float rounding noise.
void mark_outliers(std::vector<double>& x, double factor) {
  const auto [slope, intercept] = fit_line(x);
  std::vector<double> resid;
  resid.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (std::isfinite(x[k])) resid.push_back(x[k] - (slope * static_cast<double>(k) + intercept));
  }
  if (resid.size() < 3) return;
  const double med = median(resid);
  std::vector<double> dev;
  dev.reserve(resid.size());
  for (double r : resid) dev.push_back(std::fabs(r - med));
  const double mad = std::max(median(dev), 1e-12 * (1.0 + std::fabs(med)));
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k])) continue;
    const double r = x[k] - (slope * static_cast<double>(k) + intercept);
    if (std::fabs(r - med) > factor * mad) x[k] = kNaN;
  }
}

// Fill NaN runs by linear interpolation between the bracketing finite
// samples; leading/trailing runs take the nearest finite value. Runs longer
// than max_gap are a data-quality error.
void repair_gaps(std::vector<double>& x, int max_gap, const ChannelLabel& label) {
  const std::size_t n = x.size();
  std::size_t k = 0;
  while (k < n) {
    if (std::isfinite(x[k])) {
      ++k;
      continue;
    }
    std::size_t end = k;
    while (end < n && !std::isfinite(x[end])) ++end;
    const std::size_t run = end - k;
    if (run > static_cast<std::size_t>(max_gap)) {
      throw Error(ErrorKind::data_quality,
                  "data-quality: gap of " + std::to_string(run) + " samples in channel " +
                      label.plant + ":" + to_string(label.kind) + " exceeds " +
                      std::to_string(max_gap));
    }
    const bool has_left = k > 0;
    const bool has_right = end < n;
    if (!has_left && !has_right) {
      throw Error(ErrorKind::data_quality, "data-quality: channel " + label.plant + ":" +
                                               to_string(label.kind) + " has no valid samples");
    }
    for (std::size_t j = k; j < end; ++j) {
      if (has_left && has_right) {
        const double t = static_cast<double>(j - (k - 1)) / static_cast<double>(end - (k - 1));
        x[j] = x[k - 1] + t * (x[end] - x[k - 1]);
      } else if (has_left) {
        x[j] = x[k - 1];
      } else {
        x[j] = x[end];
      }
    }
    k = end;
  }
}

}  // namespace

std::pair<double, double> compute_pq(const PhasorRecord& rec, std::size_t record_index) {
  const bool finite = std::isfinite(rec.v) && std::isfinite(rec.theta_v) && std::isfinite(rec.i) &&
                      std::isfinite(rec.theta_i);
  if (!finite || rec.v < 0.0 || rec.i < 0.0) {
    throw Error(ErrorKind::data_quality,
                "rejected-sample: invalid phasor at record " + std::to_string(record_index));
  }
  const double s = rec.v * rec.i;
  const double d = rec.theta_v - rec.theta_i;
  return {s * std::cos(d), s * std::sin(d)};
}

RawChannels phasor_to_raw(const std::map<std::string, std::vector<PhasorRecord>>& records) {
  if (records.empty()) {
    throw Error(ErrorKind::data_quality, "phasor input: no plants");
  }

  // Shared time axis: sorted union of all reporting instants.
  std::vector<double> times;
  for (const auto& [plant, recs] : records) {
    for (const auto& r : recs) times.push_back(r.t);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  RawChannels raw;
  raw.t = times;
  for (const auto& [plant, recs] : records) {
    Channel p{{plant, ChannelKind::P}, std::vector<double>(times.size(), kNaN)};
    Channel q{{plant, ChannelKind::Q}, std::vector<double>(times.size(), kNaN)};
    std::size_t index = 0;
    for (const auto& rec : recs) {
      const auto it = std::lower_bound(times.begin(), times.end(), rec.t);
      const auto slot = static_cast<std::size_t>(it - times.begin());
      if (rec.quality == SampleQuality::good) {
        const auto [pv, qv] = compute_pq(rec, index);
        p.samples[slot] = pv;
        q.samples[slot] = qv;
      }
      ++index;
    }
    raw.channels.push_back(std::move(p));
    raw.channels.push_back(std::move(q));
  }
  return raw;
}

ChannelSet clean(const RawChannels& raw, const CleanConfig& cfg) {
  const std::size_t n_src = raw.t.size();
  if (n_src < 2 || raw.channels.empty()) {
    throw Error(ErrorKind::data_quality, "data-quality: need at least 2 samples per channel");
  }
  for (const auto& ch : raw.channels) {
    if (ch.samples.size() != n_src) {
      throw Error(ErrorKind::data_quality, "data-quality: channel/time length mismatch");
    }
  }
  for (std::size_t k = 1; k < n_src; ++k) {
    if (!(raw.t[k] > raw.t[k - 1])) {
      throw Error(ErrorKind::data_quality,
                  "resampling: timestamps not strictly increasing at row " + std::to_string(k));
    }
  }

  std::vector<double> diffs(n_src - 1);
  for (std::size_t k = 0; k + 1 < n_src; ++k) diffs[k] = raw.t[k + 1] - raw.t[k];
  const double dt = median(diffs);
  if (!(dt > 0.0)) {
    throw Error(ErrorKind::data_quality, "resampling: cannot determine a sampling interval");
  }

  const double t0 = raw.t.front();
  bool uniform = true;
  for (double d : diffs) {
    if (std::fabs(d - dt) > cfg.jitter_tol * dt) {
      uniform = false;
      break;
    }
  }

  ChannelSet cs;
  cs.dt = dt;
  cs.t0 = t0;
  std::size_t n_grid = n_src;

  if (uniform) {
    // Jitter within tolerance: snap sample k to grid slot k. The endpoint
    // estimate of dt averages the per-interval jitter out.
    cs.dt = (raw.t.back() - t0) / static_cast<double>(n_src - 1);
    cs.channels = raw.channels;
  } else {
    // Linear resampling onto the uniform grid. Grid points whose bracketing
    // source interval spans a hole (> 1.5 dt) or a NaN become missing; the
    // grid never extends past the last observed instant.
    n_grid = static_cast<std::size_t>(std::floor((raw.t.back() - t0) / dt + 1e-9)) + 1;
    if (n_grid < 2) {
      throw Error(ErrorKind::data_quality, "resampling: record too short for the uniform grid");
    }
    cs.channels.reserve(raw.channels.size());
    for (const auto& src : raw.channels) {
      Channel ch{src.label, std::vector<double>(n_grid, kNaN)};
      std::size_t left = 0;
      for (std::size_t g = 0; g < n_grid; ++g) {
        const double tg = t0 + static_cast<double>(g) * dt;
        while (left + 1 < n_src && raw.t[left + 1] <= tg) ++left;
        if (tg < raw.t[left] || left + 1 >= n_src) {
          if (std::fabs(tg - raw.t[left]) <= cfg.jitter_tol * dt) ch.samples[g] = src.samples[left];
          continue;
        }
        const std::size_t right = left + 1;
        if (raw.t[right] - raw.t[left] > 1.5 * dt) continue;  // hole: leave missing
        if (!std::isfinite(src.samples[left]) || !std::isfinite(src.samples[right])) continue;
        const double w = (tg - raw.t[left]) / (raw.t[right] - raw.t[left]);
        ch.samples[g] = src.samples[left] + w * (src.samples[right] - src.samples[left]);
      }
      cs.channels.push_back(std::move(ch));
    }
  }

  for (auto& ch : cs.channels) {
    mark_outliers(ch.samples, cfg.outlier_mad_factor);
    const auto removed =
        static_cast<std::size_t>(std::count_if(ch.samples.begin(), ch.samples.end(),
                                               [](double v) { return !std::isfinite(v); }));
    if (static_cast<double>(removed) >
        cfg.max_removed_frac * static_cast<double>(ch.samples.size())) {
      throw Error(ErrorKind::data_quality,
                  "data-quality: " + std::to_string(removed) + "/" +
                      std::to_string(ch.samples.size()) + " samples removed from channel " +
                      ch.label.plant + ":" + to_string(ch.label.kind));
    }
    repair_gaps(ch.samples, cfg.max_gap_samples, ch.label);
  }

  cs.validate();
  return cs;
}

ChannelSet lowpass_denoise(const ChannelSet& cs, double f_cut_hz) {
  cs.validate();
  if (!(f_cut_hz > 0.0) || f_cut_hz >= cs.nyquist_hz()) {
    throw Error(ErrorKind::config, "configuration: low-pass cutoff must lie in (0, Nyquist)");
  }
  const FilterCoefficients coeffs = design_butterworth_lowpass(f_cut_hz, cs.dt, 4);
  ChannelSet out = cs;
  for (auto& ch : out.channels) ch.samples = filtfilt(ch.samples, coeffs);
  return out;
}

ChannelSet detrend(const ChannelSet& cs) {
  cs.validate();
  ChannelSet out = cs;
  for (auto& ch : out.channels) {
    const auto [slope, intercept] = fit_line(ch.samples);
    for (std::size_t k = 0; k < ch.samples.size(); ++k) {
      ch.samples[k] -= slope * static_cast<double>(k) + intercept;
    }
  }
  return out;
}

}  // namespace oscroot
