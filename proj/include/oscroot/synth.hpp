#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oscroot/modal.hpp"
#include "oscroot/types.hpp"

namespace oscroot {

struct SyntheticMode {
  double freq_hz = 0.0;        // damped frequency
  double damping_ratio = 0.0;  // in [0, 1)
  Eigen::VectorXcd shape;      // complex channel pattern, one entry per channel
};

enum class ForcingWaveform { sine, rectangular };

struct Forcing {
  double freq_hz = 0.0;
  ForcingWaveform waveform = ForcingWaveform::sine;
  std::size_t channel = 0;
  double amplitude = 1.0;
};

struct SyntheticScenario {
  std::vector<SyntheticMode> modes;
  std::vector<ChannelLabel> channel_labels;
  double dt = 0.0;
  double duration_s = 0.0;
  double noise_std = 0.0;
  std::optional<Forcing> forcing;
  std::uint64_t seed = 0;

  std::size_t n_channels() const { return channel_labels.size(); }
  void validate() const;
};

struct OracleMode {
  std::complex<double> lambda;
  std::map<std::string, double> plant_participation;  // normalized, max == 1
};

// Channels are sums of Re(shape * e^{lambda t}) with lambda from (freq,
// zeta), plus seeded Gaussian noise and an optional additive forcing
// waveform on one channel. Deterministic per seed.
ChannelSet generate(const SyntheticScenario& scn);

// The continuous system matrix the scenario realizes on the channel space;
// modal contributions evolve as 2x2 rotation-decay blocks observed through
// the stacked mode shapes.
Eigen::MatrixXd system_matrix(const SyntheticScenario& scn);

// Ground truth by dense eigendecomposition of system_matrix, independent of
// the pipeline: per-mode continuous eigenvalue and plant participation from
// element-wise right*left eigenvector products.
std::vector<OracleMode> oracle_eig(const SyntheticScenario& scn,
                                   Aggregation agg = Aggregation::mag_sum);

SyntheticScenario load_scenario(const std::string& path);
SyntheticScenario parse_scenario(const std::string& json_text);

}  // namespace oscroot
