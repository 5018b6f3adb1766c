#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oscroot/edmd.hpp"
#include "oscroot/ingest.hpp"
#include "oscroot/modal.hpp"
#include "oscroot/spectral.hpp"
#include "oscroot/types.hpp"

namespace oscroot {

struct AnalysisConfig {
  std::string input_path;
  std::string schema = "auto";  // phasor | direct | auto
  std::string out_dir = ".";
  std::optional<std::pair<double, double>> window;
  std::optional<double> forced_f_s_hz;  // skip FFT detection, analyze this frequency
  bool lpf_enabled = false;
  double lpf_cut_hz = 3.0;
  double threshold_rel = 0.3;
  double ratio_lo = 0.9;
  double ratio_hi = 1.1;
  int bandpass_order = 4;
  double retain_frac = 0.65;
  std::optional<int> truncation_r;
  Aggregation aggregation = Aggregation::mag_sum;
  int top_k = 5;
  bool debug_edmd = false;
  CleanConfig clean;
};

AnalysisConfig load_config(const std::string& path);
AnalysisConfig parse_config(const std::string& json_text);

// Fully resolved configuration, defaults included, for the report echo.
nlohmann::ordered_json config_echo(const AnalysisConfig& cfg);

struct AnalyzedMode {
  ModeReport report;
  double amplitude = 0.0;  // FFT amplitude of the source candidate
  std::vector<double> singular_values;
  Eigen::MatrixXd g, h, m_tilde;
  Eigen::VectorXcd mu;
};

struct SkippedMode {
  double f_s_hz = 0.0;
  std::string reason;
};

struct AnalysisResult {
  std::pair<double, double> window{0.0, 0.0};
  Spectrum spectrum;                     // aggregated, detrended full record
  std::vector<ModeCandidate> candidates;
  std::vector<AnalyzedMode> modes;       // ordered by descending FFT amplitude
  std::vector<SkippedMode> skipped;
};

// Read cfg.input_path with schema detection and run ingest cleaning.
ChannelSet load_channels(const AnalysisConfig& cfg);

// Samples with t0 + k*dt inside [start_s, end_s].
ChannelSet slice_window(const ChannelSet& cs, double start_s, double end_s);

// Load -> clean -> (optional LPF) -> detrend -> FFT candidates -> window ->
// per-mode bandpass/EDMD/participation. Throws when no dominant mode exists
// or when every candidate fails its per-mode pass.
AnalysisResult run_analysis(const AnalysisConfig& cfg);

// Same pipeline on an in-memory ChannelSet (tests, library callers).
AnalysisResult analyze_channels(const ChannelSet& cs, const AnalysisConfig& cfg);

nlohmann::ordered_json report_json(const AnalysisResult& result, const AnalysisConfig& cfg);

// Writes report.json, spectrum.csv, participation_<freq>.csv, and (when
// enabled) debug_edmd.json into cfg.out_dir.
void emit_artifacts(const AnalysisResult& result, const AnalysisConfig& cfg);

}  // namespace oscroot
