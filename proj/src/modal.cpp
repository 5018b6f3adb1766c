#include "oscroot/modal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oscroot/errors.hpp"

namespace oscroot {

Aggregation aggregation_from_string(const std::string& name) {
  if (name == "mag_sum") return Aggregation::mag_sum;
  if (name == "sum_mag") return Aggregation::sum_mag;
  throw Error(ErrorKind::config,
              "configuration: unknown aggregation '" + name + "' (use mag_sum or sum_mag)");
}

std::string to_string(Aggregation agg) {
  return agg == Aggregation::mag_sum ? "mag_sum" : "sum_mag";
}

Eigen::VectorXcd participation_factors(const KoopmanDecomposition& dec, int mode_index) {
  if (mode_index < 0 || mode_index >= dec.r) {
    throw Error(ErrorKind::numerical,
                "numerical: mode index " + std::to_string(mode_index) + " outside [0, " +
                    std::to_string(dec.r) + ")");
  }
  const Eigen::Index n = dec.phi_hat.rows();
  Eigen::VectorXcd p(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    p(s) = dec.phi_hat(s, mode_index) * dec.xi_hat(mode_index, s);
  }
  return p;
}

std::map<std::string, double> aggregate_by_plant(const Eigen::VectorXcd& p,
                                                 const std::vector<ChannelLabel>& labels,
                                                 Aggregation agg) {
  if (static_cast<std::size_t>(p.size()) != labels.size()) {
    throw Error(ErrorKind::numerical, "numerical: participation/label length mismatch");
  }
  if (agg == Aggregation::mag_sum) {
    std::map<std::string, double> out;
    for (Eigen::Index s = 0; s < p.size(); ++s) {
      out[labels[static_cast<std::size_t>(s)].plant] += std::abs(p(s));
    }
    return out;
  }
  std::map<std::string, std::complex<double>> sums;
  for (Eigen::Index s = 0; s < p.size(); ++s) {
    sums[labels[static_cast<std::size_t>(s)].plant] += p(s);
  }
  std::map<std::string, double> out;
  for (const auto& [plant, sum] : sums) out[plant] = std::abs(sum);
  return out;
}

std::map<std::string, double> normalize(const std::map<std::string, double>& p) {
  double max_val = 0.0;
  for (const auto& [plant, v] : p) max_val = std::max(max_val, v);
  if (!(max_val > 0.0)) {
    throw Error(ErrorKind::numerical,
                "degenerate-mode: every plant shows zero participation in this mode");
  }
  std::map<std::string, double> out;
  for (const auto& [plant, v] : p) out[plant] = v / max_val;
  return out;
}

int match_mode(const KoopmanDecomposition& dec, double f_s_hz) {
  if (!(f_s_hz > 0.0)) {
    throw Error(ErrorKind::config, "configuration: target frequency must be positive");
  }
  int best = -1;
  double best_err = std::numeric_limits<double>::infinity();
  for (int i = 0; i < dec.r; ++i) {
    if (std::abs(dec.mu(i)) == 0.0) continue;
    const ContinuousMode cm = to_continuous(dec.mu(i), dec.dt);
    if (!(cm.lambda.imag() > 0.0)) continue;
    const double err = std::fabs(cm.freq_hz - f_s_hz);
    if (err < best_err) {
      best_err = err;
      best = i;
    }
  }
  if (best < 0 || best_err > 0.15 * f_s_hz) {
    throw Error(ErrorKind::numerical,
                "no-matching-mode: no eigenvalue within 15% of " + std::to_string(f_s_hz) +
                    " Hz; revisit the truncation order or the bandpass band");
  }
  return best;
}

ModeReport build_mode_report(const KoopmanDecomposition& dec, double f_s_hz, Aggregation agg) {
  const int idx = match_mode(dec, f_s_hz);
  const ContinuousMode cm = to_continuous(dec.mu(idx), dec.dt);
  const Eigen::VectorXcd p = participation_factors(dec, idx);

  ModeReport report;
  report.f_s_requested_hz = f_s_hz;
  report.lambda = cm.lambda;
  report.freq_hz = cm.freq_hz;
  report.damping_pct = 100.0 * cm.damping_ratio;
  report.truncation_r = dec.r;
  report.plant_participation = normalize(aggregate_by_plant(p, dec.channel_labels, agg));
  report.raw_participation.reserve(dec.channel_labels.size());
  for (Eigen::Index s = 0; s < p.size(); ++s) {
    report.raw_participation.emplace_back(dec.channel_labels[static_cast<std::size_t>(s)], p(s));
  }
  return report;
}

std::vector<std::pair<std::string, double>> rank_contributors(const ModeReport& report,
                                                              std::size_t top_k) {
  std::vector<std::pair<std::string, double>> ranked(report.plant_participation.begin(),
                                                     report.plant_participation.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > top_k) ranked.resize(top_k);
  return ranked;
}

}  // namespace oscroot
