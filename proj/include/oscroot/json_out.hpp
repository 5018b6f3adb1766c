#pragma once

#include <string>

#include <json.hpp>

namespace oscroot {

// Deterministic serialization: insertion-ordered keys, two-space indent,
// floating-point values at 12 significant digits. Identical input produces
// byte-identical output across runs and platforms.
std::string dump_json(const nlohmann::ordered_json& j);

void write_json_file(const std::string& path, const nlohmann::ordered_json& j);

}  // namespace oscroot
