#pragma once

#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "oscroot/edmd.hpp"
#include "oscroot/types.hpp"

namespace oscroot {

// Participation factors are complex per channel; plants aggregate either by
// summing magnitudes (default: non-negative, no conjugate cancellation) or
// by the magnitude of the complex sum.
enum class Aggregation { mag_sum, sum_mag };

Aggregation aggregation_from_string(const std::string& name);
std::string to_string(Aggregation agg);

struct ModeReport {
  double f_s_requested_hz = 0.0;
  std::complex<double> lambda;
  double freq_hz = 0.0;
  double damping_pct = 0.0;
  int truncation_r = 0;
  std::map<std::string, double> plant_participation;  // normalized, max == 1
  std::vector<std::pair<ChannelLabel, std::complex<double>>> raw_participation;
};

// p_si = phi_hat[s,i] * xi_hat[i,s]; sums to 1 over channels.
Eigen::VectorXcd participation_factors(const KoopmanDecomposition& dec, int mode_index);

std::map<std::string, double> aggregate_by_plant(const Eigen::VectorXcd& p,
                                                 const std::vector<ChannelLabel>& labels,
                                                 Aggregation agg = Aggregation::mag_sum);

// Divide by the maximum so the top plant reads exactly 1.
std::map<std::string, double> normalize(const std::map<std::string, double>& p);

// Index of the positive-frequency eigenvalue closest to f_s; mismatch beyond
// 15% relative is an error.
int match_mode(const KoopmanDecomposition& dec, double f_s_hz);

ModeReport build_mode_report(const KoopmanDecomposition& dec, double f_s_hz,
                             Aggregation agg = Aggregation::mag_sum);

std::vector<std::pair<std::string, double>> rank_contributors(const ModeReport& report,
                                                              std::size_t top_k);

}  // namespace oscroot
