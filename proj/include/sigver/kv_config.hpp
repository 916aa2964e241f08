#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <string>

#include "sigver/error.hpp"

namespace sigver {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Flat `key = value` text; `#` starts a comment. Later keys win.
inline std::map<std::string, std::string> parse_key_values(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "line " + std::to_string(lineno) + ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kMissingFile, path);
  return parse_key_values(is);
}

}  // namespace sigver
