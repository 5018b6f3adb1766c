#include "oscroot/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "oscroot/errors.hpp"

namespace oscroot {

namespace {

std::complex<double> continuous_lambda(const SyntheticMode& mode) {
  const double omega_d = 2.0 * std::numbers::pi * mode.freq_hz;
  const double omega_n = omega_d / std::sqrt(1.0 - mode.damping_ratio * mode.damping_ratio);
  return {-mode.damping_ratio * omega_n, omega_d};
}

Eigen::MatrixXd pinv_real(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? 1e-12 * sv(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace

void SyntheticScenario::validate() const {
  if (!(dt > 0.0)) throw Error(ErrorKind::config, "configuration: scenario dt must be positive");
  if (!(duration_s > dt)) {
    throw Error(ErrorKind::config, "configuration: scenario duration must exceed dt");
  }
  if (channel_labels.empty()) {
    throw Error(ErrorKind::config, "configuration: scenario needs at least one channel");
  }
  if (modes.empty()) {
    throw Error(ErrorKind::config, "configuration: scenario needs at least one mode");
  }
  if (noise_std < 0.0) {
    throw Error(ErrorKind::config, "configuration: noise_std must be non-negative");
  }
  const double nyquist = 0.5 / dt;
  for (const auto& mode : modes) {
    if (!(mode.freq_hz > 0.0) || mode.freq_hz >= nyquist) {
      throw Error(ErrorKind::config, "configuration: mode frequency " +
                                         std::to_string(mode.freq_hz) +
                                         " Hz outside (0, Nyquist)");
    }
    if (!(mode.damping_ratio >= 0.0 && mode.damping_ratio < 1.0)) {
      throw Error(ErrorKind::config, "configuration: damping ratio must lie in [0, 1)");
    }
    if (static_cast<std::size_t>(mode.shape.size()) != channel_labels.size()) {
      throw Error(ErrorKind::config, "configuration: mode shape length must equal channel count");
    }
    if (mode.shape.norm() == 0.0) {
      throw Error(ErrorKind::config, "configuration: mode shape must be nonzero");
    }
  }
  if (forcing) {
    if (!(forcing->freq_hz > 0.0) || forcing->freq_hz >= nyquist) {
      throw Error(ErrorKind::config, "configuration: forcing frequency outside (0, Nyquist)");
    }
    if (forcing->channel >= channel_labels.size()) {
      throw Error(ErrorKind::config, "configuration: forcing channel index out of range");
    }
  }
}

ChannelSet generate(const SyntheticScenario& scn) {
  scn.validate();
  const auto n_samples = static_cast<std::size_t>(std::floor(scn.duration_s / scn.dt)) + 1;
  const std::size_t n_ch = scn.n_channels();

  ChannelSet cs;
  cs.dt = scn.dt;
  cs.t0 = 0.0;
  cs.channels.resize(n_ch);
  for (std::size_t s = 0; s < n_ch; ++s) {
    cs.channels[s].label = scn.channel_labels[s];
    cs.channels[s].samples.assign(n_samples, 0.0);
  }

  for (const auto& mode : scn.modes) {
    const std::complex<double> lambda = continuous_lambda(mode);
    for (std::size_t k = 0; k < n_samples; ++k) {
      const std::complex<double> e = std::exp(lambda * (static_cast<double>(k) * scn.dt));
      for (std::size_t s = 0; s < n_ch; ++s) {
        cs.channels[s].samples[k] += (mode.shape(static_cast<Eigen::Index>(s)) * e).real();
      }
    }
  }

  if (scn.forcing) {
    const Forcing& f = *scn.forcing;
    auto& target = cs.channels[f.channel].samples;
    for (std::size_t k = 0; k < n_samples; ++k) {
      const double phase = 2.0 * std::numbers::pi * f.freq_hz * static_cast<double>(k) * scn.dt;
      const double s = std::sin(phase);
      target[k] += f.waveform == ForcingWaveform::sine
                       ? f.amplitude * s
                       : f.amplitude * (s >= 0.0 ? 1.0 : -1.0);
    }
  }

  if (scn.noise_std > 0.0) {
    std::mt19937_64 rng(scn.seed);
    std::normal_distribution<double> dist(0.0, scn.noise_std);
    for (auto& ch : cs.channels) {
      for (double& v : ch.samples) v += dist(rng);
    }
  }
  return cs;
}

Eigen::MatrixXd system_matrix(const SyntheticScenario& scn) {
  scn.validate();
  const auto n = static_cast<Eigen::Index>(scn.n_channels());
  const auto n_states = static_cast<Eigen::Index>(2 * scn.modes.size());

  // Each mode contributes a 2-state rotation-decay block; channel s sees
  // Re(c_s) * Re(a) - Im(c_s) * Im(a) of the modal coordinate a.
  Eigen::MatrixXd a_blk = Eigen::MatrixXd::Zero(n_states, n_states);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n_states);
  for (std::size_t m = 0; m < scn.modes.size(); ++m) {
    const std::complex<double> lambda = continuous_lambda(scn.modes[m]);
    const auto i = static_cast<Eigen::Index>(2 * m);
    a_blk(i, i) = lambda.real();
    a_blk(i, i + 1) = -lambda.imag();
    a_blk(i + 1, i) = lambda.imag();
    a_blk(i + 1, i + 1) = lambda.real();
    for (Eigen::Index s = 0; s < n; ++s) {
      c(s, i) = scn.modes[m].shape(s).real();
      c(s, i + 1) = -scn.modes[m].shape(s).imag();
    }
  }
  return c * a_blk * pinv_real(c);
}

std::vector<OracleMode> oracle_eig(const SyntheticScenario& scn, Aggregation agg) {
  const Eigen::MatrixXd a = system_matrix(scn);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::numerical, "numerical: oracle eigensolver failed");
  }
  const Eigen::VectorXcd lambdas = es.eigenvalues();
  const Eigen::MatrixXcd vecs = es.eigenvectors();

  // Keep the dynamic eigenvalues; the observation map's null space adds
  // zeros that carry no participation.
  double max_abs = 0.0;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) max_abs = std::max(max_abs, std::abs(lambdas(i)));
  std::vector<Eigen::Index> dynamic;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    if (std::abs(lambdas(i)) > 1e-9 * max_abs) dynamic.push_back(i);
  }

  Eigen::MatrixXcd phi(a.rows(), static_cast<Eigen::Index>(dynamic.size()));
  for (std::size_t j = 0; j < dynamic.size(); ++j) {
    phi.col(static_cast<Eigen::Index>(j)) = vecs.col(dynamic[j]);
  }
  // Left eigenvectors: the dynamic block is orthogonal to the null space, so
  // the pseudoinverse of the dynamic eigenvector matrix gives its rows.
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > 1e-12 * sv(0)) inv(i) = 1.0 / sv(i);
  }
  const Eigen::MatrixXcd xi = svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();

  std::vector<OracleMode> out;
  out.reserve(scn.modes.size());
  for (const auto& mode : scn.modes) {
    const std::complex<double> target = continuous_lambda(mode);
    Eigen::Index best = -1;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < dynamic.size(); ++j) {
      const std::complex<double> lam = lambdas(dynamic[j]);
      if (!(lam.imag() > 0.0)) continue;
      const double err = std::abs(lam - target);
      if (err < best_err) {
        best_err = err;
        best = static_cast<Eigen::Index>(j);
      }
    }
    if (best < 0) {
      throw Error(ErrorKind::numerical, "numerical: oracle found no eigenvalue for a mode");
    }

    std::map<std::string, double> plants;
    if (agg == Aggregation::mag_sum) {
      for (Eigen::Index s = 0; s < phi.rows(); ++s) {
        plants[scn.channel_labels[static_cast<std::size_t>(s)].plant] +=
            std::abs(phi(s, best) * xi(best, s));
      }
    } else {
      std::map<std::string, std::complex<double>> sums;
      for (Eigen::Index s = 0; s < phi.rows(); ++s) {
        sums[scn.channel_labels[static_cast<std::size_t>(s)].plant] += phi(s, best) * xi(best, s);
      }
      for (const auto& [plant, sum] : sums) plants[plant] = std::abs(sum);
    }
    double max_val = 0.0;
    for (const auto& [plant, v] : plants) max_val = std::max(max_val, v);
    if (max_val > 0.0) {
      for (auto& [plant, v] : plants) v /= max_val;
    }

    OracleMode om;
    om.lambda = lambdas(dynamic[static_cast<std::size_t>(best)]);
    om.plant_participation = std::move(plants);
    out.push_back(std::move(om));
  }
  return out;
}

namespace {

SyntheticScenario scenario_from_json(const nlohmann::json& j) {
  SyntheticScenario scn;
  try {
    scn.dt = j.at("dt").get<double>();
    scn.duration_s = j.at("duration_s").get<double>();
    scn.noise_std = j.value("noise_std", 0.0);
    scn.seed = j.value("seed", std::uint64_t{0});

    for (const auto& plant : j.at("plants")) {
      const auto id = plant.get<std::string>();
      scn.channel_labels.push_back({id, ChannelKind::P});
      scn.channel_labels.push_back({id, ChannelKind::Q});
    }

    for (const auto& jm : j.at("modes")) {
      SyntheticMode mode;
      mode.freq_hz = jm.at("freq_hz").get<double>();
      mode.damping_ratio = jm.at("damping_ratio").get<double>();
      const auto& shape = jm.at("shape");
      mode.shape.resize(static_cast<Eigen::Index>(shape.size()));
      for (std::size_t s = 0; s < shape.size(); ++s) {
        const auto& entry = shape[s];
        if (entry.is_array()) {
          mode.shape(static_cast<Eigen::Index>(s)) = {entry.at(0).get<double>(),
                                                      entry.at(1).get<double>()};
        } else {
          mode.shape(static_cast<Eigen::Index>(s)) = {entry.get<double>(), 0.0};
        }
      }
      scn.modes.push_back(std::move(mode));
    }

    if (j.contains("forcing") && !j.at("forcing").is_null()) {
      const auto& jf = j.at("forcing");
      Forcing f;
      f.freq_hz = jf.at("freq_hz").get<double>();
      const auto waveform = jf.at("waveform").get<std::string>();
      if (waveform == "sine") {
        f.waveform = ForcingWaveform::sine;
      } else if (waveform == "rectangular") {
        f.waveform = ForcingWaveform::rectangular;
      } else {
        throw Error(ErrorKind::config,
                    "configuration: forcing waveform must be sine or rectangular");
      }
      f.channel = jf.at("channel").get<std::size_t>();
      f.amplitude = jf.value("amplitude", 1.0);
      scn.forcing = f;
    }
  } catch (const Error&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("configuration: scenario JSON: ") + e.what());
  }
  scn.validate();
  return scn;
}

}  // namespace

SyntheticScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::config, "configuration: cannot open scenario file " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

SyntheticScenario parse_scenario(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("configuration: scenario JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace oscroot
