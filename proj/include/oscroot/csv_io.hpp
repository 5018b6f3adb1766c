#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "oscroot/types.hpp"

namespace oscroot {

// Direct schema: header `t,<plant>:P,<plant>:Q,...`, one column per channel.
// Empty cells and non-numeric values become NaN (missing).
RawChannels read_direct_csv(const std::string& path);

// Phasor schema: header `t,plant,V,theta_V,I,theta_I[,quality]`, long format
// with one row per plant per instant. Rows are grouped per plant in input order.
std::map<std::string, std::vector<PhasorRecord>> read_phasor_csv(const std::string& path);

// True if the file's header row matches the phasor schema.
bool sniff_phasor_schema(const std::string& path);

void write_direct_csv(const std::string& path, const ChannelSet& cs);

// `freq_hz,magnitude` rows.
void write_spectrum_csv(const std::string& path, const std::vector<double>& freq_hz,
                        const std::vector<double>& mag);

// `plant,participation` rows.
void write_participation_csv(const std::string& path,
                             const std::vector<std::pair<std::string, double>>& rows);

}  // namespace oscroot
