#include <complex>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oscroot/bandpass.hpp"
#include "oscroot/csv_io.hpp"
#include "oscroot/edmd.hpp"
#include "oscroot/errors.hpp"
#include "oscroot/json_out.hpp"
#include "oscroot/modal.hpp"
#include "oscroot/pipeline.hpp"
#include "oscroot/spectral.hpp"
#include "oscroot/synth.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string input;
  std::string out_dir;
  int r = 0;
  std::vector<double> window;
  double fs = 0.0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = false) {
  auto* config = cmd->add_option("--config", args.config_path, "JSON configuration file");
  if (config_required) config->required();
  cmd->add_option("--input", args.input, "Input CSV (phasor or direct schema)");
  cmd->add_option("--out", args.out_dir, "Output directory (default: from config or '.')");
  cmd->add_option("--r", args.r, "Truncation order override");
  cmd->add_option("--window", args.window, "Analysis window start_s,end_s")->delimiter(',');
  cmd->add_option("--fs", args.fs, "Target mode frequency in Hz");
}

oscroot::AnalysisConfig resolve_config(const CommonArgs& args) {
  oscroot::AnalysisConfig cfg =
      args.config_path.empty() ? oscroot::AnalysisConfig{} : oscroot::load_config(args.config_path);
  if (!args.input.empty()) cfg.input_path = args.input;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.r > 0) cfg.truncation_r = args.r;
  if (!args.window.empty()) {
    if (args.window.size() != 2) {
      throw oscroot::Error(oscroot::ErrorKind::config,
                           "configuration: --window needs exactly start_s,end_s");
    }
    cfg.window = {{args.window[0], args.window[1]}};
  }
  if (args.fs > 0.0) cfg.forced_f_s_hz = args.fs;
  return cfg;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw oscroot::Error(oscroot::ErrorKind::config,
                         "configuration: cannot create output directory " + dir);
  }
}

int cmd_analyze(const CommonArgs& args) {
  const oscroot::AnalysisConfig cfg = resolve_config(args);
  const oscroot::AnalysisResult result = oscroot::run_analysis(cfg);
  oscroot::emit_artifacts(result, cfg);

  std::printf("window: %.3f s .. %.3f s\n", result.window.first, result.window.second);
  for (const auto& am : result.modes) {
    const auto ranked =
        oscroot::rank_contributors(am.report, static_cast<std::size_t>(cfg.top_k));
    std::printf("mode %.4g Hz -> %.4g Hz, damping %.3f%%, r=%d, top:", am.report.f_s_requested_hz,
                am.report.freq_hz, am.report.damping_pct, am.report.truncation_r);
    for (const auto& [plant, part] : ranked) std::printf(" %s(%.2f)", plant.c_str(), part);
    std::printf("\n");
  }
  for (const auto& sk : result.skipped) {
    std::fprintf(stderr, "oscroot: skipped %.4g Hz: %s\n", sk.f_s_hz, sk.reason.c_str());
  }
  std::printf("report: %s/report.json\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_fft(const CommonArgs& args) {
  oscroot::AnalysisConfig cfg = resolve_config(args);
  oscroot::ChannelSet cs = oscroot::load_channels(cfg);
  if (cfg.lpf_enabled) cs = oscroot::lowpass_denoise(cs, cfg.lpf_cut_hz);
  cs = oscroot::detrend(cs);
  if (cfg.window) cs = oscroot::slice_window(cs, cfg.window->first, cfg.window->second);

  const oscroot::Spectrum spec = oscroot::aggregate_spectrum(cs);
  const auto candidates = oscroot::dominant_modes(cs, cfg.threshold_rel);

  ensure_out_dir(cfg.out_dir);
  const std::filesystem::path out(cfg.out_dir);
  oscroot::write_spectrum_csv((out / "spectrum.csv").string(), spec.freqs_hz, spec.mags);
  nlohmann::ordered_json jc = nlohmann::ordered_json::array();
  for (const auto& mc : candidates) {
    jc.push_back({{"f_s_hz", mc.f_s_hz},
                  {"amplitude", mc.amplitude},
                  {"harmonic_of_hz", mc.harmonic_of_hz
                                         ? nlohmann::ordered_json(*mc.harmonic_of_hz)
                                         : nlohmann::ordered_json(nullptr)}});
  }
  oscroot::write_json_file((out / "candidates.json").string(), jc);

  for (const auto& mc : candidates) {
    if (mc.harmonic_of_hz) {
      std::printf("candidate %.4g Hz (amplitude %.4g, harmonic of %.4g Hz)\n", mc.f_s_hz,
                  mc.amplitude, *mc.harmonic_of_hz);
    } else {
      std::printf("candidate %.4g Hz (amplitude %.4g)\n", mc.f_s_hz, mc.amplitude);
    }
  }
  if (candidates.empty()) {
    std::fprintf(stderr, "oscroot: no-dominant-mode: no spectral peak clears the threshold\n");
    return 2;
  }
  return 0;
}

int cmd_filter(const CommonArgs& args) {
  const oscroot::AnalysisConfig cfg = resolve_config(args);
  if (!cfg.forced_f_s_hz) {
    throw oscroot::Error(oscroot::ErrorKind::config,
                         "configuration: filter needs --fs (band center frequency)");
  }
  oscroot::ChannelSet cs = oscroot::load_channels(cfg);
  if (cfg.lpf_enabled) cs = oscroot::lowpass_denoise(cs, cfg.lpf_cut_hz);
  cs = oscroot::detrend(cs);
  if (cfg.window) cs = oscroot::slice_window(cs, cfg.window->first, cfg.window->second);

  oscroot::BandpassSpec spec;
  spec.f_s_hz = *cfg.forced_f_s_hz;
  spec.f_lo_hz = cfg.ratio_lo * spec.f_s_hz;
  spec.f_hi_hz = cfg.ratio_hi * spec.f_s_hz;
  spec.order = cfg.bandpass_order;
  spec.retain_frac = cfg.retain_frac;
  const oscroot::FilterCoefficients coeffs = oscroot::design_butterworth_bandpass(spec, cs.dt);

  oscroot::ChannelSet filtered;
  filtered.dt = cs.dt;
  const std::size_t n = cs.length();
  const auto keep = std::min<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.retain_frac * static_cast<double>(n))), n);
  filtered.t0 = cs.t0 + static_cast<double>((n - keep) / 2) * cs.dt;
  for (const auto& ch : cs.channels) {
    filtered.channels.push_back(
        {ch.label, oscroot::retain_center(oscroot::filtfilt(ch.samples, coeffs),
                                          cfg.retain_frac, cs.dt, spec.f_s_hz)});
  }

  ensure_out_dir(cfg.out_dir);
  const std::string path =
      (std::filesystem::path(cfg.out_dir) / "filtered.csv").string();
  oscroot::write_direct_csv(path, filtered);
  std::printf("filtered %zu channels around %.4g Hz -> %s\n", filtered.channels.size(),
              spec.f_s_hz, path.c_str());
  return 0;
}

int cmd_edmd(const CommonArgs& args) {
  const oscroot::AnalysisConfig cfg = resolve_config(args);
  const oscroot::ChannelSet cs = oscroot::load_channels(cfg);

  const oscroot::SnapshotPair sp = oscroot::build_snapshots(cs);
  const oscroot::KoopmanOperator op = oscroot::estimate_operator(sp);
  std::vector<double> sv(op.singular_values.data(),
                         op.singular_values.data() + op.singular_values.size());
  int r = oscroot::select_truncation(sv, 1, cfg.truncation_r);
  if (!cfg.truncation_r) {
    int rank = 0;
    for (double s : sv) {
      if (s > 1e-12 * sv.front()) ++rank;
    }
    r = std::min(r, std::max(1, rank));
  }
  const oscroot::KoopmanDecomposition dec = oscroot::reduce_and_decompose(op, r);

  ensure_out_dir(cfg.out_dir);
  const std::filesystem::path out(cfg.out_dir);
  nlohmann::ordered_json d;
  d["f_s"] = cfg.forced_f_s_hz ? nlohmann::ordered_json(*cfg.forced_f_s_hz)
                               : nlohmann::ordered_json(nullptr);
  {
    nlohmann::ordered_json g = nlohmann::ordered_json::array();
    nlohmann::ordered_json h = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < op.g.rows(); ++i) {
      nlohmann::ordered_json gr = nlohmann::ordered_json::array();
      nlohmann::ordered_json hr = nlohmann::ordered_json::array();
      for (Eigen::Index jj = 0; jj < op.g.cols(); ++jj) {
        gr.push_back(op.g(i, jj));
        hr.push_back(op.h(i, jj));
      }
      g.push_back(std::move(gr));
      h.push_back(std::move(hr));
    }
    d["G"] = std::move(g);
    d["H"] = std::move(h);
  }
  d["sigma"] = sv;
  {
    nlohmann::ordered_json mt = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < dec.m_tilde.rows(); ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (Eigen::Index jj = 0; jj < dec.m_tilde.cols(); ++jj) row.push_back(dec.m_tilde(i, jj));
      mt.push_back(std::move(row));
    }
    d["M_tilde"] = std::move(mt);
  }
  nlohmann::ordered_json mu_re = nlohmann::ordered_json::array();
  nlohmann::ordered_json mu_im = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < dec.mu.size(); ++i) {
    mu_re.push_back(dec.mu(i).real());
    mu_im.push_back(dec.mu(i).imag());
  }
  d["mu_re"] = std::move(mu_re);
  d["mu_im"] = std::move(mu_im);
  oscroot::write_json_file((out / "debug_edmd.json").string(),
                           nlohmann::ordered_json::array({d}));

  for (Eigen::Index i = 0; i < dec.mu.size(); ++i) {
    const auto cm = oscroot::to_continuous(dec.mu(i), dec.dt);
    std::printf("mu[%lld] = %.6g%+.6gj  |  %.4g Hz, damping %.3f%%\n",
                static_cast<long long>(i), dec.mu(i).real(), dec.mu(i).imag(), cm.freq_hz,
                100.0 * cm.damping_ratio);
  }

  if (cfg.forced_f_s_hz) {
    const oscroot::ModeReport report =
        oscroot::build_mode_report(dec, *cfg.forced_f_s_hz, cfg.aggregation);
    const auto ranked =
        oscroot::rank_contributors(report, report.plant_participation.size());
    char tag[32];
    std::snprintf(tag, sizeof(tag), "%.2f", report.f_s_requested_hz);
    oscroot::write_participation_csv(
        (out / (std::string("participation_") + tag + ".csv")).string(), ranked);
    std::printf("mode %.4g Hz: freq %.4g Hz, damping %.3f%%, top contributor %s\n",
                report.f_s_requested_hz, report.freq_hz, report.damping_pct,
                ranked.front().first.c_str());
  }
  return 0;
}

int cmd_synth(const CommonArgs& args) {
  if (args.config_path.empty()) {
    throw oscroot::Error(oscroot::ErrorKind::config,
                         "configuration: synth needs --config <scenario.json>");
  }
  const oscroot::SyntheticScenario scn = oscroot::load_scenario(args.config_path);
  const oscroot::ChannelSet cs = oscroot::generate(scn);

  const std::string out_dir = args.out_dir.empty() ? "." : args.out_dir;
  ensure_out_dir(out_dir);
  const std::string path = (std::filesystem::path(out_dir) / "synth.csv").string();
  oscroot::write_direct_csv(path, cs);

  for (const auto& om : oscroot::oracle_eig(scn)) {
    const double freq = std::abs(om.lambda.imag()) / (2.0 * 3.14159265358979323846);
    std::string top;
    double top_val = -1.0;
    for (const auto& [plant, v] : om.plant_participation) {
      if (v > top_val) {
        top_val = v;
        top = plant;
      }
    }
    std::printf("mode %.4g Hz (lambda %.4g%+.4gj), dominant plant %s\n", freq, om.lambda.real(),
                om.lambda.imag(), top.c_str());
  }
  std::printf("wrote %s (%zu channels x %zu samples)\n", path.c_str(), cs.channels.size(),
              cs.length());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oscroot: dominant-oscillation root cause analysis from PMU time-series"};
  app.require_subcommand(1);
  app.footer(
      "Config file keys (JSON, defaults shown): input, schema=auto, out_dir=.,\n"
      "  window=[start_s,end_s], fs, lpf.enabled=false / lpf.cut_hz=3.0,\n"
      "  fft.threshold_rel=0.3, bandpass.ratio_lo=0.9 / ratio_hi=1.1 / order=4 /\n"
      "  retain_frac=0.65, truncation.r, aggregation=mag_sum, top_k=5, debug_edmd=false,\n"
      "  clean.outlier_mad_factor=6 / max_gap_samples=5 / max_removed_frac=0.2 /\n"
      "  jitter_tol=0.01.\n"
      "Exit codes: 0 ok, 2 no dominant mode, 3 data quality, 4 configuration, 5 numerical.");

  CommonArgs analyze_args, fft_args, filter_args, edmd_args, synth_args;
  auto* analyze =
      app.add_subcommand("analyze", "Full pipeline: clean, FFT, per-mode bandpass + EDMD, "
                                    "participation ranking");
  add_common(analyze, analyze_args);
  auto* fft = app.add_subcommand("fft", "Detect dominant frequencies; write spectrum.csv and "
                                        "candidates.json");
  add_common(fft, fft_args);
  auto* filter = app.add_subcommand(
      "filter", "Zero-phase bandpass around --fs and central retention; write filtered.csv");
  add_common(filter, filter_args);
  auto* edmd = app.add_subcommand(
      "edmd", "Snapshot EDMD on the input channels; write debug_edmd.json");
  add_common(edmd, edmd_args);
  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic scenario CSV from a scenario JSON (--config)");
  add_common(synth, synth_args, /*config_required=*/true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 4;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(analyze_args);
    if (fft->parsed()) return cmd_fft(fft_args);
    if (filter->parsed()) return cmd_filter(filter_args);
    if (edmd->parsed()) return cmd_edmd(edmd_args);
    if (synth->parsed()) return cmd_synth(synth_args);
  } catch (const oscroot::Error& e) {
    std::cerr << "oscroot: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "oscroot: internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
