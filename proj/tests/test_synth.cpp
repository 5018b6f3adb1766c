#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oracle_helpers.hpp"
#include "oscroot/edmd.hpp"
#include "oscroot/errors.hpp"
#include "oscroot/modal.hpp"
#include "oscroot/synth.hpp"

using namespace oscroot;

namespace {

constexpr double kDt30 = 1.0 / 30.0;
constexpr double kPi = std::numbers::pi;

std::complex<double> analytic_lambda(double freq_hz, double zeta) {
  const double omega_d = 2.0 * kPi * freq_hz;
  const double omega_n = omega_d / std::sqrt(1.0 - zeta * zeta);
  return {-zeta * omega_n, omega_d};
}

SyntheticMode make_mode(double freq_hz, double zeta, const std::vector<std::complex<double>>& shape) {
  SyntheticMode mode;
  mode.freq_hz = freq_hz;
  mode.damping_ratio = zeta;
  mode.shape.resize(static_cast<Eigen::Index>(shape.size()));
  for (std::size_t s = 0; s < shape.size(); ++s) {
    mode.shape(static_cast<Eigen::Index>(s)) = shape[s];
  }
  return mode;
}

std::vector<ChannelLabel> plant_labels(const std::vector<std::string>& plants) {
  std::vector<ChannelLabel> labels;
  for (const auto& id : plants) {
    labels.push_back({id, ChannelKind::P});
    labels.push_back({id, ChannelKind::Q});
  }
  return labels;
}

// Two plants, two decoupled modes: plant A carries 1.27 Hz, plant B 1.41 Hz.
SyntheticScenario two_plant_scenario() {
  SyntheticScenario scn;
  scn.channel_labels = plant_labels({"A", "B"});
  scn.modes.push_back(make_mode(1.27, 0.010, {{1.0, 0.0}, {0.6, 0.1}, {0.0, 0.0}, {0.0, 0.0}}));
  scn.modes.push_back(make_mode(1.41, 0.012, {{0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}, {0.7, -0.1}}));
  scn.dt = kDt30;
  scn.duration_s = 20.0;
  scn.noise_std = 0.0;
  scn.seed = 5;
  return scn;
}

}  // namespace

TEST_CASE("an undamped unit-shape mode is a pure cosine") {
  SyntheticScenario scn;
  scn.channel_labels = {{"1", ChannelKind::P}, {"1", ChannelKind::Q}};
  scn.modes.push_back(make_mode(1.0, 0.0, {{1.0, 0.0}, {0.0, 1.0}}));
  scn.dt = kDt30;
  scn.duration_s = 10.0;
  const ChannelSet cs = generate(scn);

  CHECK(cs.dt == kDt30);
  CHECK(cs.t0 == 0.0);
  REQUIRE(cs.channels.size() == 2);
  CHECK(cs.channels[0].label == scn.channel_labels[0]);
  CHECK(cs.length() == 301);

  const double omega = 2.0 * kPi;
  for (std::size_t k = 0; k < cs.length(); ++k) {
    const double t = static_cast<double>(k) * kDt30;
    // Re(1 * e^{jwt}) = cos; Re(j * e^{jwt}) = -sin.
    CHECK(cs.channels[0].samples[k] == doctest::Approx(std::cos(omega * t)).epsilon(1e-12));
    CHECK(cs.channels[1].samples[k] == doctest::Approx(-std::sin(omega * t)).epsilon(1e-12));
  }
}

TEST_CASE("the envelope decays at the analytic damping rate") {
  SyntheticScenario scn;
  scn.channel_labels = {{"1", ChannelKind::P}};
  scn.modes.push_back(make_mode(1.41, 0.05, {{1.0, 0.0}}));
  scn.dt = kDt30;
  scn.duration_s = 20.0;
  const ChannelSet cs = generate(scn);

  const double slope = oracle::log_envelope_slope(cs.channels[0].samples, kDt30);
  const double omega_n = 2.0 * kPi * 1.41 / std::sqrt(1.0 - 0.05 * 0.05);
  CHECK(slope == doctest::Approx(-0.05 * omega_n).epsilon(0.02));
}

TEST_CASE("rectangular forcing carries odd harmonics in 1/k proportion") {
  SyntheticScenario scn;
  scn.channel_labels = {{"1", ChannelKind::P}};
  // A negligible passive mode keeps the scenario valid without polluting the
  // forcing spectrum.
  scn.modes.push_back(make_mode(5.0, 0.1, {{1e-9, 0.0}}));
  scn.dt = kDt30;
  scn.duration_s = 40.0;
  Forcing f;
  f.freq_hz = 0.4;
  f.waveform = ForcingWaveform::rectangular;
  f.channel = 0;
  f.amplitude = 1.0;
  scn.forcing = f;
  const ChannelSet cs = generate(scn);

  const auto mags = oracle::dft_magnitudes(cs.channels[0].samples);
  const double df = 1.0 / (kDt30 * static_cast<double>(cs.length()));
  auto at = [&](double freq) {
    return mags[static_cast<std::size_t>(std::lround(freq / df))];
  };
  const double fundamental = at(0.4);
  CHECK(fundamental == doctest::Approx(4.0 / kPi).epsilon(0.02));
  CHECK(at(1.2) / fundamental == doctest::Approx(1.0 / 3.0).epsilon(0.05));
  CHECK(at(2.0) / fundamental == doctest::Approx(1.0 / 5.0).epsilon(0.05));
  // Even harmonics stay near the folding noise floor.
  CHECK(at(0.8) < 0.05 * fundamental);
}

TEST_CASE("generation is deterministic per seed") {
  SyntheticScenario scn = two_plant_scenario();
  scn.noise_std = 0.1;
  scn.seed = 42;
  const ChannelSet a = generate(scn);
  const ChannelSet b = generate(scn);
  REQUIRE(a.channels.size() == b.channels.size());
  for (std::size_t s = 0; s < a.channels.size(); ++s) {
    CHECK(a.channels[s].samples == b.channels[s].samples);
  }

  scn.seed = 43;
  const ChannelSet c = generate(scn);
  bool any_diff = false;
  for (std::size_t s = 0; s < a.channels.size(); ++s) {
    if (a.channels[s].samples != c.channels[s].samples) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("scenario validation rejects malformed inputs") {
  const SyntheticScenario good = two_plant_scenario();
  CHECK_NOTHROW(good.validate());

  auto expect_config = [](SyntheticScenario scn) {
    try {
      scn.validate();
      FAIL("expected a config error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::config);
    }
  };

  SyntheticScenario bad = good;
  bad.dt = 0.0;
  expect_config(bad);

  bad = good;
  bad.duration_s = bad.dt / 2.0;
  expect_config(bad);

  bad = good;
  bad.channel_labels.clear();
  expect_config(bad);

  bad = good;
  bad.modes.clear();
  expect_config(bad);

  bad = good;
  bad.noise_std = -0.1;
  expect_config(bad);

  bad = good;
  bad.modes[0].freq_hz = 0.0;
  expect_config(bad);

  bad = good;
  bad.modes[0].freq_hz = 15.0;  // Nyquist at 30 Hz sampling
  expect_config(bad);

  bad = good;
  bad.modes[0].damping_ratio = 1.0;
  expect_config(bad);

  bad = good;
  bad.modes[0].damping_ratio = -0.01;
  expect_config(bad);

  bad = good;
  bad.modes[0].shape.resize(3);
  expect_config(bad);

  bad = good;
  bad.modes[0].shape.setZero();
  expect_config(bad);

  bad = good;
  bad.forcing = Forcing{0.0, ForcingWaveform::sine, 0, 1.0};
  expect_config(bad);

  bad = good;
  bad.forcing = Forcing{0.4, ForcingWaveform::sine, 99, 1.0};
  expect_config(bad);

  // generate runs the same validation.
  bad = good;
  bad.dt = -1.0;
  CHECK_THROWS_AS(generate(bad), Error);
}

TEST_CASE("parse_scenario reads the full schema") {
  const std::string text = R"({
    "dt": 0.03333333333333333,
    "duration_s": 2.0,
    "seed": 7,
    "noise_std": 0.01,
    "plants": ["30", "31"],
    "modes": [
      {"freq_hz": 1.3, "damping_ratio": 0.01,
       "shape": [[1.0, 0.0], [0.6, 0.2], 0.21, [0.1, -0.04]]}
    ],
    "forcing": {"freq_hz": 0.4, "waveform": "rectangular", "channel": 1, "amplitude": 2.0}
  })";
  const SyntheticScenario scn = parse_scenario(text);

  CHECK(scn.dt == doctest::Approx(1.0 / 30.0).epsilon(1e-12));
  CHECK(scn.duration_s == 2.0);
  CHECK(scn.seed == 7);
  CHECK(scn.noise_std == 0.01);
  REQUIRE(scn.channel_labels.size() == 4);
  CHECK(scn.channel_labels[0] == ChannelLabel{"30", ChannelKind::P});
  CHECK(scn.channel_labels[1] == ChannelLabel{"30", ChannelKind::Q});
  CHECK(scn.channel_labels[2] == ChannelLabel{"31", ChannelKind::P});
  CHECK(scn.channel_labels[3] == ChannelLabel{"31", ChannelKind::Q});
  REQUIRE(scn.modes.size() == 1);
  CHECK(scn.modes[0].freq_hz == 1.3);
  CHECK(scn.modes[0].damping_ratio == 0.01);
  REQUIRE(scn.modes[0].shape.size() == 4);
  CHECK(scn.modes[0].shape(1) == std::complex<double>(0.6, 0.2));
  CHECK(scn.modes[0].shape(2) == std::complex<double>(0.21, 0.0));
  REQUIRE(scn.forcing.has_value());
  CHECK(scn.forcing->freq_hz == 0.4);
  CHECK(scn.forcing->waveform == ForcingWaveform::rectangular);
  CHECK(scn.forcing->channel == 1);
  CHECK(scn.forcing->amplitude == 2.0);

  // Omitted optionals fall back to defaults.
  const SyntheticScenario lean = parse_scenario(R"({
    "dt": 0.1, "duration_s": 5.0, "plants": ["1"],
    "modes": [{"freq_hz": 1.0, "damping_ratio": 0.0, "shape": [1.0, 0.5]}]
  })");
  CHECK(lean.noise_std == 0.0);
  CHECK(lean.seed == 0);
  CHECK(!lean.forcing.has_value());
}

TEST_CASE("parse_scenario rejects malformed documents") {
  auto expect_config = [](const std::string& text) {
    try {
      parse_scenario(text);
      FAIL("expected a config error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::config);
    }
  };
  expect_config("{nope");
  expect_config(R"({"duration_s": 5.0, "plants": ["1"], "modes": []})");  // missing dt
  expect_config(R"({
    "dt": 0.1, "duration_s": 5.0, "plants": ["1"],
    "modes": [{"freq_hz": 1.0, "damping_ratio": 0.0, "shape": [1.0, 0.5]}],
    "forcing": {"freq_hz": 0.4, "waveform": "triangle", "channel": 0}
  })");
  // Shape/channel mismatch surfaces through scenario validation.
  expect_config(R"({
    "dt": 0.1, "duration_s": 5.0, "plants": ["1"],
    "modes": [{"freq_hz": 1.0, "damping_ratio": 0.0, "shape": [1.0]}]
  })");
}

TEST_CASE("load_scenario round-trips through a file") {
  const std::string text = R"({
    "dt": 0.03333333333333333, "duration_s": 3.0, "seed": 9, "noise_std": 0.02,
    "plants": ["4"],
    "modes": [{"freq_hz": 2.0, "damping_ratio": 0.01, "shape": [1.0, [0.3, 0.2]]}]
  })";
  const auto path = std::filesystem::temp_directory_path() / "oscroot_test_scn.json";
  {
    std::ofstream out(path);
    out << text;
  }
  const ChannelSet from_file = generate(load_scenario(path.string()));
  const ChannelSet from_text = generate(parse_scenario(text));
  REQUIRE(from_file.channels.size() == from_text.channels.size());
  for (std::size_t s = 0; s < from_file.channels.size(); ++s) {
    CHECK(from_file.channels[s].samples == from_text.channels[s].samples);
  }
  std::filesystem::remove(path);

  try {
    load_scenario("/nonexistent/scenario.json");
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
}

TEST_CASE("system_matrix realizes the constructed poles") {
  SyntheticScenario scn;
  scn.channel_labels = plant_labels({"A", "B"});
  scn.modes.push_back(make_mode(1.27, 0.010, {{1.0, 0.0}, {0.55, 0.15}, {0.1, 0.0}, {0.0, 0.05}}));
  scn.modes.push_back(make_mode(1.41, 0.012, {{0.1, 0.0}, {0.05, 0.0}, {1.0, 0.0}, {0.6, -0.1}}));
  scn.dt = kDt30;
  scn.duration_s = 20.0;

  const Eigen::MatrixXd a = system_matrix(scn);
  const auto eigs = oracle::eigenvalues(a);
  for (const auto& mode : scn.modes) {
    const std::complex<double> target = analytic_lambda(mode.freq_hz, mode.damping_ratio);
    double best = 1e300;
    double best_conj = 1e300;
    for (const auto& eig : eigs) {
      best = std::min(best, std::abs(eig - target));
      best_conj = std::min(best_conj, std::abs(eig - std::conj(target)));
    }
    CHECK(best < 1e-9);
    CHECK(best_conj < 1e-9);
  }
}

TEST_CASE("oracle_eig reports exact poles and plant rankings when decoupled") {
  const SyntheticScenario scn = two_plant_scenario();
  const auto oracle_modes = oracle_eig(scn);
  REQUIRE(oracle_modes.size() == 2);

  CHECK(std::abs(oracle_modes[0].lambda - analytic_lambda(1.27, 0.010)) < 1e-9);
  CHECK(std::abs(oracle_modes[1].lambda - analytic_lambda(1.41, 0.012)) < 1e-9);

  CHECK(oracle_modes[0].plant_participation.at("A") == 1.0);
  CHECK(oracle_modes[0].plant_participation.at("B") < 1e-9);
  CHECK(oracle_modes[1].plant_participation.at("B") == 1.0);
  CHECK(oracle_modes[1].plant_participation.at("A") < 1e-9);

  // Pure function of the scenario: repeated calls agree exactly.
  const auto again = oracle_eig(scn);
  for (std::size_t m = 0; m < oracle_modes.size(); ++m) {
    CHECK(oracle_modes[m].lambda == again[m].lambda);
    CHECK(oracle_modes[m].plant_participation == again[m].plant_participation);
  }
}

TEST_CASE("noise-free spectra peak at each damped frequency") {
  SyntheticScenario scn;
  scn.channel_labels = {{"1", ChannelKind::P}};
  scn.modes.push_back(make_mode(1.27, 0.005, {{1.0, 0.0}}));
  scn.modes.push_back(make_mode(2.10, 0.008, {{0.8, 0.0}}));
  scn.dt = kDt30;
  scn.duration_s = 40.0;
  const ChannelSet cs = generate(scn);

  const auto mags = oracle::dft_magnitudes(cs.channels[0].samples);
  const double df = 1.0 / (kDt30 * static_cast<double>(cs.length()));
  for (const auto& mode : scn.modes) {
    const auto lo = static_cast<std::size_t>(std::floor((mode.freq_hz - 0.5) / df));
    const auto hi = static_cast<std::size_t>(std::ceil((mode.freq_hz + 0.5) / df));
    std::size_t peak = lo;
    for (std::size_t b = lo; b <= hi && b < mags.size(); ++b) {
      if (mags[b] > mags[peak]) peak = b;
    }
    CHECK(std::abs(static_cast<double>(peak) * df - mode.freq_hz) <= df);
  }
}

TEST_CASE("the decomposition recovers oracle modes from noise-free data") {
  const SyntheticScenario scn = two_plant_scenario();
  const ChannelSet cs = generate(scn);
  const KoopmanOperator op = estimate_operator(build_snapshots(cs));
  const KoopmanDecomposition dec = reduce_and_decompose(op, 4);

  const auto oracle_modes = oracle_eig(scn);
  for (std::size_t m = 0; m < scn.modes.size(); ++m) {
    const ModeReport report = build_mode_report(dec, scn.modes[m].freq_hz);
    const std::complex<double> truth = oracle_modes[m].lambda;
    const double truth_freq = truth.imag() / (2.0 * kPi);
    const double truth_zeta = -truth.real() / std::abs(truth);
    CHECK(std::abs(report.freq_hz - truth_freq) < 0.01 * truth_freq);
    CHECK(std::abs(report.damping_pct / 100.0 - truth_zeta) < 0.02);

    const auto ranked = rank_contributors(report, 1);
    std::string oracle_top;
    double oracle_best = -1.0;
    for (const auto& [plant, value] : oracle_modes[m].plant_participation) {
      if (value > oracle_best) {
        oracle_best = value;
        oracle_top = plant;
      }
    }
    REQUIRE(ranked.size() == 1);
    CHECK(ranked[0].first == oracle_top);
  }
}
