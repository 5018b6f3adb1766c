#include "oscroot/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "oscroot/bandpass.hpp"
#include "oscroot/csv_io.hpp"
#include "oscroot/errors.hpp"
#include "oscroot/json_out.hpp"

namespace oscroot {

namespace {

void require_keys(const nlohmann::json& j, const char* scope,
                  const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw Error(ErrorKind::config, std::string("configuration: unknown key '") + key +
                                         "' in " + scope);
    }
  }
}

}  // namespace

ChannelSet slice_window(const ChannelSet& cs, double start_s, double end_s) {
  const auto n = static_cast<long long>(cs.length());
  auto k0 = static_cast<long long>(std::ceil((start_s - cs.t0) / cs.dt - 1e-9));
  auto k1 = static_cast<long long>(std::floor((end_s - cs.t0) / cs.dt + 1e-9));
  k0 = std::clamp(k0, 0LL, n - 1);
  k1 = std::clamp(k1, 0LL, n - 1);
  if (k1 - k0 < 1) {
    throw Error(ErrorKind::data_quality, "insufficient-data: selected window holds < 2 samples");
  }
  ChannelSet out;
  out.dt = cs.dt;
  out.t0 = cs.t0 + static_cast<double>(k0) * cs.dt;
  out.channels.reserve(cs.channels.size());
  for (const auto& ch : cs.channels) {
    out.channels.push_back(
        {ch.label, {ch.samples.begin() + k0, ch.samples.begin() + k1 + 1}});
  }
  return out;
}

namespace {

nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string freq_tag(double f_hz) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", f_hz);
  return buf;
}

}  // namespace

AnalysisConfig parse_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("configuration: ") + e.what());
  }

  AnalysisConfig cfg;
  try {
    require_keys(j, "config", {"input", "schema", "out_dir", "window", "fs", "lpf", "fft",
                               "bandpass", "truncation", "aggregation", "top_k", "debug_edmd",
                               "clean"});
    cfg.input_path = j.value("input", std::string{});
    cfg.schema = j.value("schema", std::string{"auto"});
    if (cfg.schema != "auto" && cfg.schema != "phasor" && cfg.schema != "direct") {
      throw Error(ErrorKind::config,
                  "configuration: schema must be auto, phasor, or direct");
    }
    cfg.out_dir = j.value("out_dir", std::string{"."});
    if (j.contains("window") && !j["window"].is_null()) {
      const auto& w = j["window"];
      if (!w.is_array() || w.size() != 2) {
        throw Error(ErrorKind::config, "configuration: window must be [start_s, end_s]");
      }
      cfg.window = {{w[0].get<double>(), w[1].get<double>()}};
    }
    if (j.contains("fs") && !j["fs"].is_null()) cfg.forced_f_s_hz = j["fs"].get<double>();
    if (j.contains("lpf")) {
      require_keys(j["lpf"], "lpf", {"enabled", "cut_hz"});
      cfg.lpf_enabled = j["lpf"].value("enabled", false);
      cfg.lpf_cut_hz = j["lpf"].value("cut_hz", 3.0);
    }
    if (j.contains("fft")) {
      require_keys(j["fft"], "fft", {"threshold_rel"});
      cfg.threshold_rel = j["fft"].value("threshold_rel", 0.3);
    }
    if (j.contains("bandpass")) {
      require_keys(j["bandpass"], "bandpass",
                   {"ratio_lo", "ratio_hi", "order", "retain_frac"});
      cfg.ratio_lo = j["bandpass"].value("ratio_lo", 0.9);
      cfg.ratio_hi = j["bandpass"].value("ratio_hi", 1.1);
      cfg.bandpass_order = j["bandpass"].value("order", 4);
      cfg.retain_frac = j["bandpass"].value("retain_frac", 0.65);
    }
    if (j.contains("truncation")) {
      require_keys(j["truncation"], "truncation", {"r"});
      if (j["truncation"].contains("r") && !j["truncation"]["r"].is_null()) {
        cfg.truncation_r = j["truncation"]["r"].get<int>();
      }
    }
    if (j.contains("aggregation")) {
      cfg.aggregation = aggregation_from_string(j["aggregation"].get<std::string>());
    }
    cfg.top_k = j.value("top_k", 5);
    cfg.debug_edmd = j.value("debug_edmd", false);
    if (j.contains("clean")) {
      require_keys(j["clean"], "clean",
                   {"outlier_mad_factor", "max_gap_samples", "max_removed_frac", "jitter_tol"});
      cfg.clean.outlier_mad_factor = j["clean"].value("outlier_mad_factor", 6.0);
      cfg.clean.max_gap_samples = j["clean"].value("max_gap_samples", 5);
      cfg.clean.max_removed_frac = j["clean"].value("max_removed_frac", 0.20);
      cfg.clean.jitter_tol = j["clean"].value("jitter_tol", 0.01);
    }
  } catch (const Error&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("configuration: ") + e.what());
  }

  if (!(cfg.threshold_rel > 0.0 && cfg.threshold_rel <= 1.0)) {
    throw Error(ErrorKind::config, "configuration: fft.threshold_rel must lie in (0, 1]");
  }
  if (!(cfg.ratio_lo > 0.0 && cfg.ratio_hi > cfg.ratio_lo)) {
    throw Error(ErrorKind::config, "configuration: bandpass ratios must satisfy 0 < lo < hi");
  }
  if (cfg.top_k < 1) throw Error(ErrorKind::config, "configuration: top_k must be >= 1");
  return cfg;
}

AnalysisConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "configuration: cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

nlohmann::ordered_json config_echo(const AnalysisConfig& cfg) {
  nlohmann::ordered_json j;
  j["input"] = cfg.input_path;
  j["schema"] = cfg.schema;
  j["out_dir"] = cfg.out_dir;
  j["window"] = cfg.window
                    ? nlohmann::ordered_json::array({cfg.window->first, cfg.window->second})
                    : nlohmann::ordered_json(nullptr);
  j["fs"] = cfg.forced_f_s_hz ? nlohmann::ordered_json(*cfg.forced_f_s_hz)
                              : nlohmann::ordered_json(nullptr);
  j["lpf"] = {{"enabled", cfg.lpf_enabled}, {"cut_hz", cfg.lpf_cut_hz}};
  j["fft"] = {{"threshold_rel", cfg.threshold_rel}};
  j["bandpass"] = {{"ratio_lo", cfg.ratio_lo},
                   {"ratio_hi", cfg.ratio_hi},
                   {"order", cfg.bandpass_order},
                   {"retain_frac", cfg.retain_frac}};
  j["truncation"] = {{"r", cfg.truncation_r ? nlohmann::ordered_json(*cfg.truncation_r)
                                            : nlohmann::ordered_json(nullptr)}};
  j["aggregation"] = to_string(cfg.aggregation);
  j["top_k"] = cfg.top_k;
  j["debug_edmd"] = cfg.debug_edmd;
  j["clean"] = {{"outlier_mad_factor", cfg.clean.outlier_mad_factor},
                {"max_gap_samples", cfg.clean.max_gap_samples},
                {"max_removed_frac", cfg.clean.max_removed_frac},
                {"jitter_tol", cfg.clean.jitter_tol}};
  return j;
}

AnalysisResult analyze_channels(const ChannelSet& cs_clean, const AnalysisConfig& cfg) {
  ChannelSet cs = cs_clean;
  if (cfg.lpf_enabled) cs = lowpass_denoise(cs, cfg.lpf_cut_hz);
  cs = detrend(cs);

  AnalysisResult result;
  result.spectrum = aggregate_spectrum(cs);

  if (cfg.forced_f_s_hz) {
    const double fs = *cfg.forced_f_s_hz;
    if (!(fs > 0.0) || fs >= cs.nyquist_hz()) {
      throw Error(ErrorKind::config, "configuration: --fs must lie in (0, Nyquist)");
    }
    ModeCandidate mc;
    mc.f_s_hz = fs;
    const double bin = result.spectrum.freqs_hz[1] - result.spectrum.freqs_hz[0];
    const auto k = static_cast<std::size_t>(std::clamp(
        std::llround(fs / bin), 0LL, static_cast<long long>(result.spectrum.mags.size()) - 1));
    mc.amplitude = result.spectrum.mags[k];
    mc.window_start_s = cs.t0;
    mc.window_end_s = cs.t0 + cs.duration();
    result.candidates = {mc};
  } else {
    result.candidates = dominant_modes(cs, cfg.threshold_rel);
    if (result.candidates.empty()) {
      throw Error(ErrorKind::no_dominant_mode,
                  "no-dominant-mode: no spectral peak clears the detection threshold");
    }
  }

  result.window = select_window(cs, result.candidates, cfg.window);
  const ChannelSet cs_w = slice_window(cs, result.window.first, result.window.second);
  for (auto& mc : result.candidates) {
    mc.window_start_s = result.window.first;
    mc.window_end_s = result.window.second;
  }

  int n_dominant = 0;
  for (const auto& mc : result.candidates) {
    if (!mc.harmonic_of_hz) ++n_dominant;
  }
  n_dominant = std::max(n_dominant, 1);

  std::optional<Error> first_error;
  for (const auto& mc : result.candidates) {
    if (mc.harmonic_of_hz) continue;  // fundamentals carry the analysis
    try {
      BandpassSpec spec;
      spec.f_s_hz = mc.f_s_hz;
      spec.f_lo_hz = cfg.ratio_lo * mc.f_s_hz;
      spec.f_hi_hz = cfg.ratio_hi * mc.f_s_hz;
      spec.order = cfg.bandpass_order;
      spec.retain_frac = cfg.retain_frac;
      const FilterCoefficients coeffs = design_butterworth_bandpass(spec, cs_w.dt);

      ChannelSet cs_m;
      cs_m.dt = cs_w.dt;
      const std::size_t n_w = cs_w.length();
      const auto keep = std::min<std::size_t>(
          static_cast<std::size_t>(std::llround(cfg.retain_frac * static_cast<double>(n_w))),
          n_w);
      cs_m.t0 = cs_w.t0 + static_cast<double>((n_w - keep) / 2) * cs_w.dt;
      cs_m.channels.reserve(cs_w.channels.size());
      for (const auto& ch : cs_w.channels) {
        Channel filtered{ch.label,
                         retain_center(filtfilt(ch.samples, coeffs), cfg.retain_frac, cs_w.dt,
                                       mc.f_s_hz)};
        cs_m.channels.push_back(std::move(filtered));
      }

      const SnapshotPair sp = build_snapshots(cs_m);
      const KoopmanOperator op = estimate_operator(sp);
      std::vector<double> sv(op.singular_values.data(),
                             op.singular_values.data() + op.singular_values.size());
      int r = select_truncation(sv, n_dominant, cfg.truncation_r);
      if (!cfg.truncation_r) {
        // Keep the automatic order within the numerically observable rank.
        int rank = 0;
        for (double s : sv) {
          if (s > 1e-12 * sv.front()) ++rank;
        }
        r = std::min(r, std::max(1, rank));
      }
      const KoopmanDecomposition dec = reduce_and_decompose(op, r);

      AnalyzedMode am;
      am.report = build_mode_report(dec, mc.f_s_hz, cfg.aggregation);
      am.amplitude = mc.amplitude;
      am.singular_values = std::move(sv);
      am.g = op.g;
      am.h = op.h;
      am.m_tilde = dec.m_tilde;
      am.mu = dec.mu;
      result.modes.push_back(std::move(am));
    } catch (const Error& e) {
      if (!first_error) first_error = e;
      result.skipped.push_back({mc.f_s_hz, e.what()});
    }
  }

  if (result.modes.empty()) {
    if (first_error) throw *first_error;
    throw Error(ErrorKind::no_dominant_mode,
                "no-dominant-mode: every detected peak is a harmonic of another");
  }
  return result;
}

ChannelSet load_channels(const AnalysisConfig& cfg) {
  if (cfg.input_path.empty()) {
    throw Error(ErrorKind::config, "configuration: no input file given");
  }
  bool phasor = false;
  if (cfg.schema == "phasor") {
    phasor = true;
  } else if (cfg.schema == "auto") {
    phasor = sniff_phasor_schema(cfg.input_path);
  }
  RawChannels raw = phasor ? phasor_to_raw(read_phasor_csv(cfg.input_path))
                           : read_direct_csv(cfg.input_path);
  return clean(raw, cfg.clean);
}

AnalysisResult run_analysis(const AnalysisConfig& cfg) {
  return analyze_channels(load_channels(cfg), cfg);
}

nlohmann::ordered_json report_json(const AnalysisResult& result, const AnalysisConfig& cfg) {
  nlohmann::ordered_json j;
  j["config"] = config_echo(cfg);
  j["window"] = {{"start_s", result.window.first}, {"end_s", result.window.second}};

  nlohmann::ordered_json candidates = nlohmann::ordered_json::array();
  for (const auto& mc : result.candidates) {
    nlohmann::ordered_json c;
    c["f_s_hz"] = mc.f_s_hz;
    c["amplitude"] = mc.amplitude;
    c["harmonic_of_hz"] = mc.harmonic_of_hz ? nlohmann::ordered_json(*mc.harmonic_of_hz)
                                            : nlohmann::ordered_json(nullptr);
    candidates.push_back(std::move(c));
  }
  j["candidates"] = std::move(candidates);

  nlohmann::ordered_json modes = nlohmann::ordered_json::array();
  for (const auto& am : result.modes) {
    nlohmann::ordered_json m;
    m["f_s"] = am.report.f_s_requested_hz;
    m["freq_hz"] = am.report.freq_hz;
    m["damping_pct"] = am.report.damping_pct;
    m["lambda_re"] = am.report.lambda.real();
    m["lambda_im"] = am.report.lambda.imag();
    m["r"] = am.report.truncation_r;
    m["amplitude"] = am.amplitude;
    m["sigma"] = am.singular_values;
    nlohmann::ordered_json plants = nlohmann::ordered_json::array();
    for (const auto& [id, part] : rank_contributors(am.report, am.report.plant_participation.size())) {
      plants.push_back({{"id", id}, {"participation", part}});
    }
    m["plants"] = std::move(plants);
    nlohmann::ordered_json channels = nlohmann::ordered_json::array();
    for (const auto& [label, p] : am.report.raw_participation) {
      channels.push_back({{"plant", label.plant},
                          {"kind", std::string(to_string(label.kind))},
                          {"p_re", p.real()},
                          {"p_im", p.imag()}});
    }
    m["channels"] = std::move(channels);
    modes.push_back(std::move(m));
  }
  j["modes"] = std::move(modes);

  nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
  for (const auto& sk : result.skipped) {
    skipped.push_back({{"f_s_hz", sk.f_s_hz}, {"reason", sk.reason}});
  }
  j["skipped"] = std::move(skipped);
  return j;
}

void emit_artifacts(const AnalysisResult& result, const AnalysisConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) {
    throw Error(ErrorKind::config,
                "configuration: cannot create output directory " + cfg.out_dir);
  }
  const std::filesystem::path out(cfg.out_dir);

  write_json_file((out / "report.json").string(), report_json(result, cfg));
  write_spectrum_csv((out / "spectrum.csv").string(), result.spectrum.freqs_hz,
                     result.spectrum.mags);

  std::set<std::string> used;
  for (const auto& am : result.modes) {
    std::string tag = freq_tag(am.report.f_s_requested_hz);
    while (used.count(tag)) tag += "_x";
    used.insert(tag);
    write_participation_csv(
        (out / ("participation_" + tag + ".csv")).string(),
        rank_contributors(am.report, am.report.plant_participation.size()));
  }

  if (cfg.debug_edmd) {
    nlohmann::ordered_json dumps = nlohmann::ordered_json::array();
    for (const auto& am : result.modes) {
      nlohmann::ordered_json d;
      d["f_s"] = am.report.f_s_requested_hz;
      d["G"] = matrix_json(am.g);
      d["H"] = matrix_json(am.h);
      d["sigma"] = am.singular_values;
      d["M_tilde"] = matrix_json(am.m_tilde);
      nlohmann::ordered_json mu_re = nlohmann::ordered_json::array();
      nlohmann::ordered_json mu_im = nlohmann::ordered_json::array();
      for (Eigen::Index i = 0; i < am.mu.size(); ++i) {
        mu_re.push_back(am.mu(i).real());
        mu_im.push_back(am.mu(i).imag());
      }
      d["mu_re"] = std::move(mu_re);
      d["mu_im"] = std::move(mu_im);
      dumps.push_back(std::move(d));
    }
    write_json_file((out / "debug_edmd.json").string(), dumps);
  }
}

}  // namespace oscroot
