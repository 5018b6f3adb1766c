#include "oscroot/json_out.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "oscroot/errors.hpp"

namespace oscroot {

namespace {

void append_double(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";  // JSON has no Inf/NaN; preprocessing should prevent these
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  out += buf;
  // Bare integers print without a decimal point; keep them valid doubles on
  // re-parse is not required, so leave as-is.
}

void append(std::string& out, const nlohmann::ordered_json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  const std::string pad_in(static_cast<std::size_t>(depth + 1) * 2, ' ');
  switch (j.type()) {
    case nlohmann::ordered_json::value_t::null:
      out += "null";
      break;
    case nlohmann::ordered_json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case nlohmann::ordered_json::value_t::number_integer:
      out += std::to_string(j.get<long long>());
      break;
    case nlohmann::ordered_json::value_t::number_unsigned:
      out += std::to_string(j.get<unsigned long long>());
      break;
    case nlohmann::ordered_json::value_t::number_float:
      append_double(out, j.get<double>());
      break;
    case nlohmann::ordered_json::value_t::string:
      out += nlohmann::json(j.get<std::string>()).dump();  // reuse escaping
      break;
    case nlohmann::ordered_json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out += pad_in;
        append(out, j[i], depth + 1);
        if (i + 1 < j.size()) out += ',';
        out += '\n';
      }
      out += pad + "]";
      break;
    }
    case nlohmann::ordered_json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      std::size_t i = 0;
      for (const auto& [key, value] : j.items()) {
        out += pad_in + nlohmann::json(key).dump() + ": ";
        append(out, value, depth + 1);
        if (++i < j.size()) out += ',';
        out += '\n';
      }
      out += pad + "}";
      break;
    }
    default:
      out += "null";
      break;
  }
}

}  // namespace

std::string dump_json(const nlohmann::ordered_json& j) {
  std::string out;
  append(out, j, 0);
  out += '\n';
  return out;
}

void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::config, "configuration: cannot write " + path);
  }
  out << dump_json(j);
}

}  // namespace oscroot
