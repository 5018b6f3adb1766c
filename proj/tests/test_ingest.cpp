#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <oscroot/errors.hpp>
#include <oscroot/ingest.hpp>

#include "oracle_helpers.hpp"

using namespace oscroot;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> sine(double f_hz, double dt, std::size_t n, double amp = 1.0,
                         double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k)
    x[k] = amp * std::sin(2.0 * std::numbers::pi * f_hz * static_cast<double>(k) * dt + phase);
  return x;
}

double rms(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

RawChannels uniform_raw(const std::vector<std::vector<double>>& samples, double dt) {
  RawChannels raw;
  raw.t.resize(samples.front().size());
  for (std::size_t k = 0; k < raw.t.size(); ++k) raw.t[k] = static_cast<double>(k) * dt;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ChannelLabel label{std::to_string(i / 2 + 1),
                       i % 2 == 0 ? ChannelKind::P : ChannelKind::Q};
    raw.channels.push_back({label, samples[i]});
  }
  return raw;
}

}  // namespace

TEST_CASE("compute_pq zero angle difference") {
  PhasorRecord rec{0.0, 1.0, 0.0, 1.0, 0.0, SampleQuality::good};
  auto [p, q] = compute_pq(rec);
  CHECK(p == doctest::Approx(1.0));
  CHECK(q == doctest::Approx(0.0));
}

TEST_CASE("compute_pq quadrature") {
  PhasorRecord rec{0.0, 1.0, std::numbers::pi / 2.0, 1.0, 0.0, SampleQuality::good};
  auto [p, q] = compute_pq(rec);
  CHECK(p == doctest::Approx(0.0));
  CHECK(q == doctest::Approx(1.0));
}

TEST_CASE("compute_pq direct evaluation") {
  PhasorRecord rec{0.0, 1.02, 0.3, 0.5, 0.1, SampleQuality::good};
  auto [p, q] = compute_pq(rec);
  CHECK(p == doctest::Approx(0.51 * std::cos(0.2)));
  CHECK(q == doctest::Approx(0.51 * std::sin(0.2)));
}

TEST_CASE("compute_pq rejects non-finite and negative magnitudes") {
  PhasorRecord bad{0.0, kNaN, 0.0, 1.0, 0.0, SampleQuality::good};
  CHECK_THROWS_WITH_AS(compute_pq(bad, 17), doctest::Contains("17"), Error);
  PhasorRecord neg{0.0, -1.0, 0.0, 1.0, 0.0, SampleQuality::good};
  CHECK_THROWS_AS(compute_pq(neg), Error);
  try {
    compute_pq(neg, 3);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data_quality);
  }
}

TEST_CASE("compute_pq power identity over random inputs") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> mag(0.0, 3.0);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  for (int trial = 0; trial < 200; ++trial) {
    PhasorRecord rec{0.0, mag(rng), ang(rng), mag(rng), ang(rng), SampleQuality::good};
    auto [p, q] = compute_pq(rec);
    const double vi = rec.v * rec.i;
    CHECK(p * p + q * q == doctest::Approx(vi * vi).epsilon(1e-12));
  }
}

TEST_CASE("clean is the identity on clean uniform data") {
  const double dt = 1.0 / 30.0;
  auto raw = uniform_raw({sine(1.0, dt, 300), sine(1.3, dt, 300, 0.5)}, dt);
  const ChannelSet cs = clean(raw);
  REQUIRE(cs.length() == 300);
  CHECK(cs.dt == doctest::Approx(dt));
  for (std::size_t i = 0; i < raw.channels.size(); ++i)
    for (std::size_t k = 0; k < 300; ++k)
      CHECK(cs.channels[i].samples[k] == doctest::Approx(raw.channels[i].samples[k]).epsilon(1e-12));
}

TEST_CASE("clean replaces a gross outlier by neighbor interpolation") {
  const double dt = 1.0 / 30.0;
  auto x = sine(1.0, dt, 300, 0.1);
  const std::size_t hit = 150;
  const double expected = 0.5 * (x[hit - 1] + x[hit + 1]);
  x[hit] = 100.0;  // ~1000x the channel scale
  auto raw = uniform_raw({x}, dt);
  const ChannelSet cs = clean(raw);
  CHECK(cs.channels[0].samples[hit] == doctest::Approx(expected).epsilon(1e-9));
  CHECK(cs.channels[0].samples[hit - 1] == doctest::Approx(x[hit - 1]).epsilon(1e-12));
}

TEST_CASE("clean rejects a channel with 30 percent missing samples") {
  const double dt = 1.0 / 30.0;
  auto x = sine(1.0, dt, 200);
  for (std::size_t k = 0; k < x.size(); k += 3) x[k] = kNaN;  // ~33% missing
  auto raw = uniform_raw({x}, dt);
  try {
    clean(raw);
    FAIL("expected a data-quality error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data_quality);
  }
}

TEST_CASE("clean interpolates short gaps and rejects long ones") {
  const double dt = 0.1;
  auto x = sine(0.5, dt, 100);
  for (std::size_t k = 40; k < 45; ++k) x[k] = kNaN;  // 5-sample gap: repairable
  auto raw = uniform_raw({x}, dt);
  const ChannelSet cs = clean(raw);
  const double lerp = x[39] + (x[45] - x[39]) * (2.0 / 6.0);
  CHECK(cs.channels[0].samples[41] == doctest::Approx(lerp).epsilon(1e-9));

  for (std::size_t k = 40; k < 46; ++k) x[k] = kNaN;  // 6-sample gap: too long
  auto raw_long = uniform_raw({x}, dt);
  try {
    clean(raw_long);
    FAIL("expected a data-quality error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data_quality);
  }
}

TEST_CASE("clean is idempotent on its own output") {
  const double dt = 1.0 / 30.0;
  auto x = sine(1.0, dt, 300);
  x[100] = 50.0;
  x[200] = kNaN;
  auto raw = uniform_raw({x, sine(2.0, dt, 300, 0.3)}, dt);
  const ChannelSet once = clean(raw);

  RawChannels again;
  again.t.resize(once.length());
  for (std::size_t k = 0; k < again.t.size(); ++k)
    again.t[k] = once.t0 + static_cast<double>(k) * once.dt;
  again.channels = once.channels;
  const ChannelSet twice = clean(again);
  REQUIRE(twice.length() == once.length());
  for (std::size_t i = 0; i < once.channels.size(); ++i)
    for (std::size_t k = 0; k < once.length(); ++k)
      CHECK(twice.channels[i].samples[k] ==
            doctest::Approx(once.channels[i].samples[k]).epsilon(1e-12));
}

TEST_CASE("clean snaps jittered timestamps onto the uniform grid") {
  const double dt = 1.0 / 30.0;
  auto x = sine(1.0, dt, 200);
  auto raw = uniform_raw({x}, dt);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> jitter(-0.004 * dt, 0.004 * dt);
  for (std::size_t k = 1; k + 1 < raw.t.size(); ++k) raw.t[k] += jitter(rng);
  const ChannelSet cs = clean(raw);
  REQUIRE(cs.length() == 200);
  CHECK(cs.dt == doctest::Approx(dt).epsilon(1e-6));
  for (std::size_t k = 0; k < 200; ++k)
    CHECK(cs.channels[0].samples[k] == doctest::Approx(x[k]).epsilon(1e-12));
}

TEST_CASE("clean resamples coarse jitter by linear interpolation") {
  const double dt = 0.1;
  const std::size_t n = 120;
  std::vector<double> t(n), x(n);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> jitter(-0.04 * dt, 0.04 * dt);
  for (std::size_t k = 0; k < n; ++k) {
    t[k] = static_cast<double>(k) * dt + (k > 0 && k + 1 < n ? jitter(rng) : 0.0);
    x[k] = 0.2 * t[k] + 1.0;  // linear signal survives linear resampling exactly
  }
  RawChannels raw;
  raw.t = t;
  raw.channels.push_back({{"1", ChannelKind::P}, x});
  const ChannelSet cs = clean(raw);
  for (std::size_t k = 0; k < cs.length(); ++k) {
    const double tk = cs.t0 + static_cast<double>(k) * cs.dt;
    CHECK(cs.channels[0].samples[k] == doctest::Approx(0.2 * tk + 1.0).epsilon(1e-9));
  }
}

TEST_CASE("clean rejects non-increasing timestamps") {
  auto raw = uniform_raw({sine(1.0, 0.1, 50)}, 0.1);
  raw.t[10] = raw.t[9];
  CHECK_THROWS_AS(clean(raw), Error);
}

TEST_CASE("phasor path yields P and Q channels per plant") {
  std::map<std::string, std::vector<PhasorRecord>> records;
  const double dt = 1.0 / 30.0;
  for (int k = 0; k < 120; ++k) {
    const double t = k * dt;
    records["30"].push_back({t, 1.0 + 0.01 * std::sin(2 * std::numbers::pi * t), 0.1, 0.5, 0.0,
                             SampleQuality::good});
    records["31"].push_back({t, 0.98, 0.05, 0.4, -0.1,
                             k == 60 ? SampleQuality::bad : SampleQuality::good});
  }
  const RawChannels raw = phasor_to_raw(records);
  REQUIRE(raw.channels.size() == 4);
  const ChannelSet cs = clean(raw);
  const auto plants = cs.plants();
  REQUIRE(plants.size() == 2);
  for (const auto& plant : plants) {
    bool has_p = false, has_q = false;
    for (const auto& ch : cs.channels) {
      if (ch.label.plant != plant) continue;
      has_p |= ch.label.kind == ChannelKind::P;
      has_q |= ch.label.kind == ChannelKind::Q;
    }
    CHECK(has_p);
    CHECK(has_q);
  }
  // the bad-quality instant was repaired, not propagated
  for (const auto& ch : cs.channels)
    for (double v : ch.samples) CHECK(std::isfinite(v));
}

TEST_CASE("detrend zeroes constants and ramps") {
  const double dt = 0.1;
  std::vector<double> constant(100, 3.7), ramp(100);
  for (std::size_t k = 0; k < ramp.size(); ++k) ramp[k] = 0.4 * static_cast<double>(k) - 2.0;
  const ChannelSet cs = oracle::make_channels({constant, ramp}, dt);
  const ChannelSet out = detrend(cs);
  for (double v : out.channels[0].samples) CHECK(std::abs(v) < 1e-9);
  for (double v : out.channels[1].samples) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("detrend recovers a sinusoid riding on a ramp") {
  const double dt = 1.0 / 30.0;
  const std::size_t n = 900;  // 30 s, 90 cycles of 3 Hz
  const auto pure = sine(3.0, dt, n);
  auto x = pure;
  for (std::size_t k = 0; k < n; ++k) x[k] += 0.05 * static_cast<double>(k) + 2.0;
  const ChannelSet out = detrend(oracle::make_channels({x}, dt));
  std::vector<double> err(n);
  for (std::size_t k = 0; k < n; ++k) err[k] = out.channels[0].samples[k] - pure[k];
  CHECK(rms(err) < 0.01 * rms(pure));
}

TEST_CASE("detrend is a projection") {
  const double dt = 1.0 / 30.0;
  auto x = sine(1.7, dt, 400, 1.2, 0.3);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += 0.01 * static_cast<double>(k);
  const ChannelSet once = detrend(oracle::make_channels({x}, dt));
  const ChannelSet twice = detrend(once);
  for (std::size_t k = 0; k < x.size(); ++k)
    CHECK(std::abs(twice.channels[0].samples[k] - once.channels[0].samples[k]) < 1e-12);
}

TEST_CASE("lowpass_denoise leaves DC untouched") {
  const ChannelSet cs = oracle::make_channels({std::vector<double>(200, 1.5)}, 1.0 / 30.0);
  const ChannelSet out = lowpass_denoise(cs, 3.0);
  for (double v : out.channels[0].samples) CHECK(v == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("lowpass_denoise attenuation matches the analytic magnitude") {
  const double dt = 1.0 / 30.0;
  const std::size_t n = 600;
  const ChannelSet hi = oracle::make_channels({sine(10.0, dt, n)}, dt);
  const ChannelSet hi_out = lowpass_denoise(hi, 3.0);
  // measure away from the edges: reflection-padding transients decay within
  // a fraction of the record, the interior sits at the steady-state level
  const std::vector<double> interior(hi_out.channels[0].samples.begin() + n / 4,
                                     hi_out.channels[0].samples.begin() + 3 * n / 4);
  const double hi_ratio = rms(interior) / rms(hi.channels[0].samples);
  CHECK(hi_ratio < 0.05);
  // forward-backward filtering squares the single-pass magnitude
  const double expected_hi = std::pow(oracle::butterworth_lowpass_mag(10.0, 3.0, 4, dt), 2);
  CHECK(hi_ratio < 100.0 * expected_hi);

  const ChannelSet lo = oracle::make_channels({sine(0.3, dt, n)}, dt);
  const ChannelSet lo_out = lowpass_denoise(lo, 3.0);
  // compare mid-record to dodge edge transients
  double max_err = 0.0;
  for (std::size_t k = n / 4; k < 3 * n / 4; ++k)
    max_err = std::max(max_err,
                       std::abs(lo_out.channels[0].samples[k] - lo.channels[0].samples[k]));
  CHECK(max_err < 0.01);
}

TEST_CASE("lowpass_denoise validates the cutoff") {
  const ChannelSet cs = oracle::make_channels({sine(1.0, 1.0 / 30.0, 100)}, 1.0 / 30.0);
  try {
    lowpass_denoise(cs, 15.0);  // == Nyquist
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
  }
  CHECK_THROWS_AS(lowpass_denoise(cs, 0.0), Error);
}
