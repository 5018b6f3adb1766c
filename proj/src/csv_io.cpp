#include "oscroot/csv_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "oscroot/errors.hpp"

namespace oscroot {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Empty or unparseable cells become NaN.
double parse_cell(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') return std::numeric_limits<double>::quiet_NaN();
  return v;
}

double parse_required(const std::string& raw, const std::string& what, std::size_t row) {
  const double v = parse_cell(raw);
  if (std::isnan(v)) {
    throw Error(ErrorKind::data_quality,
                "csv: unparseable " + what + " at data row " + std::to_string(row));
  }
  return v;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::data_quality, "csv: cannot open " + path);
  return in;
}

bool read_line(std::ifstream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void format_value(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  out += buf;
}

}  // namespace

bool sniff_phasor_schema(const std::string& path) {
  auto in = open_or_throw(path);
  std::string line;
  if (!read_line(in, line)) return false;
  auto fields = split_line(line);
  if (fields.size() < 6) return false;
  return lower(trim(fields[0])) == "t" && lower(trim(fields[1])) == "plant";
}

RawChannels read_direct_csv(const std::string& path) {
  auto in = open_or_throw(path);
  std::string line;
  if (!read_line(in, line)) {
    throw Error(ErrorKind::data_quality, "csv: empty file " + path);
  }
  const auto header = split_line(line);
  if (header.size() < 2 || lower(trim(header[0])) != "t") {
    throw Error(ErrorKind::data_quality,
                "csv: direct schema requires header `t,<plant>:P,<plant>:Q,...` in " + path);
  }

  RawChannels raw;
  raw.channels.reserve(header.size() - 1);
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    const auto colon = name.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= name.size()) {
      throw Error(ErrorKind::data_quality,
                  "csv: channel column `" + name + "` is not of the form <plant>:P or <plant>:Q");
    }
    Channel ch;
    ch.label.plant = name.substr(0, colon);
    const std::string kind = lower(name.substr(colon + 1));
    if (kind == "p") {
      ch.label.kind = ChannelKind::P;
    } else if (kind == "q") {
      ch.label.kind = ChannelKind::Q;
    } else {
      throw Error(ErrorKind::data_quality, "csv: unknown channel kind in column `" + name + "`");
    }
    raw.channels.push_back(std::move(ch));
  }

  std::size_t row = 0;
  while (read_line(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_line(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::data_quality, "csv: data row " + std::to_string(row) + " has " +
                                               std::to_string(fields.size()) + " fields, expected " +
                                               std::to_string(header.size()));
    }
    raw.t.push_back(parse_required(fields[0], "timestamp", row));
    for (std::size_t c = 1; c < fields.size(); ++c) {
      raw.channels[c - 1].samples.push_back(parse_cell(fields[c]));
    }
  }
  if (raw.t.empty()) {
    throw Error(ErrorKind::data_quality, "csv: no data rows in " + path);
  }
  return raw;
}

std::map<std::string, std::vector<PhasorRecord>> read_phasor_csv(const std::string& path) {
  auto in = open_or_throw(path);
  std::string line;
  if (!read_line(in, line)) {
    throw Error(ErrorKind::data_quality, "csv: empty file " + path);
  }
  const auto header = split_line(line);
  const char* expected[] = {"t", "plant", "v", "theta_v", "i", "theta_i"};
  if (header.size() < 6 || header.size() > 7) {
    throw Error(ErrorKind::data_quality,
                "csv: phasor schema requires header `t,plant,V,theta_V,I,theta_I[,quality]`");
  }
  for (std::size_t c = 0; c < 6; ++c) {
    if (lower(trim(header[c])) != expected[c]) {
      throw Error(ErrorKind::data_quality,
                  "csv: phasor header column " + std::to_string(c) + " is `" + trim(header[c]) +
                      "`, expected `" + expected[c] + "`");
    }
  }
  const bool has_quality = header.size() == 7;

  std::map<std::string, std::vector<PhasorRecord>> out;
  std::size_t row = 0;
  while (read_line(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_line(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::data_quality,
                  "csv: phasor data row " + std::to_string(row) + " has wrong field count");
    }
    PhasorRecord rec;
    rec.t = parse_required(fields[0], "timestamp", row);
    const std::string plant = trim(fields[1]);
    if (plant.empty()) {
      throw Error(ErrorKind::data_quality, "csv: empty plant id at data row " + std::to_string(row));
    }
    rec.v = parse_cell(fields[2]);
    rec.theta_v = parse_cell(fields[3]);
    rec.i = parse_cell(fields[4]);
    rec.theta_i = parse_cell(fields[5]);
    rec.quality = SampleQuality::good;
    if (has_quality) {
      const std::string q = lower(trim(fields[6]));
      if (q == "good" || q.empty()) {
        rec.quality = SampleQuality::good;
      } else if (q == "bad") {
        rec.quality = SampleQuality::bad;
      } else if (q == "missing") {
        rec.quality = SampleQuality::missing;
      } else {
        throw Error(ErrorKind::data_quality,
                    "csv: unknown quality `" + q + "` at data row " + std::to_string(row));
      }
    }
    out[plant].push_back(rec);
  }
  if (out.empty()) {
    throw Error(ErrorKind::data_quality, "csv: no data rows in " + path);
  }
  return out;
}

void write_direct_csv(const std::string& path, const ChannelSet& cs) {
  std::ofstream outf(path);
  if (!outf) throw Error(ErrorKind::config, "csv: cannot write " + path);
  std::string buf = "t";
  for (const auto& ch : cs.channels) {
    buf += ',';
    buf += ch.label.plant;
    buf += ':';
    buf += to_string(ch.label.kind);
  }
  buf += '\n';
  const std::size_t n = cs.length();
  for (std::size_t k = 0; k < n; ++k) {
    format_value(buf, cs.t0 + static_cast<double>(k) * cs.dt);
    for (const auto& ch : cs.channels) {
      buf += ',';
      format_value(buf, ch.samples[k]);
    }
    buf += '\n';
  }
  outf << buf;
}

void write_spectrum_csv(const std::string& path, const std::vector<double>& freq_hz,
                        const std::vector<double>& mag) {
  std::ofstream outf(path);
  if (!outf) throw Error(ErrorKind::config, "csv: cannot write " + path);
  std::string buf = "freq_hz,magnitude\n";
  for (std::size_t k = 0; k < freq_hz.size(); ++k) {
    format_value(buf, freq_hz[k]);
    buf += ',';
    format_value(buf, mag[k]);
    buf += '\n';
  }
  outf << buf;
}

void write_participation_csv(const std::string& path,
                             const std::vector<std::pair<std::string, double>>& rows) {
  std::ofstream outf(path);
  if (!outf) throw Error(ErrorKind::config, "csv: cannot write " + path);
  std::string buf = "plant,participation\n";
  for (const auto& [plant, value] : rows) {
    buf += plant;
    buf += ',';
    format_value(buf, value);
    buf += '\n';
  }
  outf << buf;
}

}  // namespace oscroot
