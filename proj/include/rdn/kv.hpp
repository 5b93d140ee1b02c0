#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rdn/errors.hpp"

namespace rdn {

// Minimal flat key=value text format: one pair per line, '#' starts a
// comment, blank lines ignored, whitespace around key and value trimmed.
// Used for run configs and the checkpoint config block.
namespace kv {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::pair<std::string, std::string>> parse(
    const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(
        pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = (nl == std::string::npos) ? text.size() + 1 : nl + 1;
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("line " + std::to_string(lineno) +
                        ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw FormatError("line " + std::to_string(lineno) + ": empty key");
    }
    out.emplace_back(key, val);
  }
  return out;
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t consumed = 0;
    const long long r = std::stoll(v, &consumed);
    if (consumed != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw FormatError("key '" + key + "': expected integer, got '" + v + "'");
  }
}

inline double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t consumed = 0;
    const double r = std::stod(v, &consumed);
    if (consumed != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw FormatError("key '" + key + "': expected number, got '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw FormatError("key '" + key + "': expected boolean, got '" + v + "'");
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t consumed = 0;
    const unsigned long long r = std::stoull(v, &consumed);
    if (consumed != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw FormatError("key '" + key + "': expected unsigned integer, got '" +
                      v + "'");
  }
}

}  // namespace kv
}  // namespace rdn
