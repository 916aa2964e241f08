#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>

#include "sigver/error.hpp"

namespace sigver {

/// Pairwise dissimilarities keyed by (classifier, parameter tag, image pair).
/// Pairs are stored unordered. Concurrent lookups share a lock; inserts
/// take it exclusively.
class ScoreCache {
 public:
  static std::string key(const std::string& classifier, const std::string& params, std::string a, std::string b) {
    if (b < a) std::swap(a, b);
    return classifier + '\t' + params + '\t' + a + '\t' + b;
  }

  std::optional<double> find(const std::string& k) const {
    std::shared_lock lock(mutex_);
    const auto it = values_.find(k);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  void insert(const std::string& k, double v) {
    std::unique_lock lock(mutex_);
    values_.emplace(k, v);
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return values_.size();
  }

  /// One entry per line: the tab-separated key followed by a hex-float value.
  void save(const std::filesystem::path& path) const {
    std::shared_lock lock(mutex_);
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
    char buf[64];
    for (const auto& [k, v] : values_) {
      std::snprintf(buf, sizeof buf, "%a", v);
      os << k << '\t' << buf << '\n';
    }
  }

  void load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) return;
    std::string line;
    std::unique_lock lock(mutex_);
    while (std::getline(is, line)) {
      const auto tab = line.rfind('\t');
      if (tab == std::string::npos) continue;
      values_[line.substr(0, tab)] = std::strtod(line.c_str() + tab + 1, nullptr);
    }
  }

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, double> values_;
};

}  // namespace sigver
