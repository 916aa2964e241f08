#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sigver/error.hpp"

namespace sigver {

/// Floor applied to degenerate normalization constants.
inline constexpr double kScoreEpsilon = 1e-12;

/// Raw dissimilarity between two images identified by catalog index.
using Dissimilarity = std::function<double(int, int)>;

struct DeltaResult {
  double value = 0.0;
  bool floored = false;
};

/// Mean over references of the distance to the nearest other reference.
inline DeltaResult user_delta(std::span<const int> refs, const Dissimilarity& d) {
  if (refs.size() < 2) throw Error(ErrorCode::kTooFewReferences, "user_delta needs >= 2 references");
  double sum = 0.0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < refs.size(); ++j)
      if (i != j) best = std::min(best, d(refs[i], refs[j]));
    sum += best;
  }
  DeltaResult r{sum / static_cast<double>(refs.size()), false};
  if (r.value < kScoreEpsilon) {
    r.value = kScoreEpsilon;
    r.floored = true;
  }
  return r;
}

inline double normalized_score(double d_value, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::kZeroDelta, "normalization constant must be > 0");
  return d_value / delta;
}

/// Minimum user-normalized dissimilarity between `t` and the references.
inline double verification_score(std::span<const int> refs, double delta, int t, const Dissimilarity& d) {
  double best = std::numeric_limits<double>::infinity();
  for (int r : refs) best = std::min(best, normalized_score(d(r, t), delta));
  return best;
}

/// Enrolled references of one user with both normalization constants.
struct UserTemplate {
  std::string user_id;
  std::vector<int> references;
  double delta_ged = 1.0;
  double delta_neural = 1.0;
  bool floored = false;
};

/// Builds a template; a classifier whose function is empty keeps delta 1.
inline UserTemplate make_template(std::string user_id, std::vector<int> refs, const Dissimilarity& d_ged,
                                  const Dissimilarity& d_neural) {
  UserTemplate t{std::move(user_id), std::move(refs), 1.0, 1.0, false};
  if (d_ged) {
    const auto r = user_delta(t.references, d_ged);
    t.delta_ged = r.value;
    t.floored |= r.floored;
  }
  if (d_neural) {
    const auto r = user_delta(t.references, d_neural);
    t.delta_neural = r.value;
    t.floored |= r.floored;
  }
  return t;
}

struct MomentStats {
  double mean = 0.0;
  double stddev = 1.0;  // population form, floored at kScoreEpsilon
  bool degenerate = false;
};

inline MomentStats population_stats(std::span<const double> values) {
  MomentStats s;
  if (values.empty()) {
    s.degenerate = true;
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  if (s.stddev < kScoreEpsilon) {
    s.stddev = kScoreEpsilon;
    s.degenerate = true;
  }
  return s;
}

/// Z-score statistics of both classifiers.
struct FusionStats {
  double mean_ged = 0.0;
  double std_ged = 1.0;
  double mean_neural = 0.0;
  double std_neural = 1.0;
  bool degenerate = false;
};

/// Statistics over cross-user reference pairs: every reference r of every
/// user, normalized by that user's delta, against every reference of every
/// other user.
inline FusionStats fusion_stats(std::span<const UserTemplate> templates, const Dissimilarity& d_ged,
                                const Dissimilarity& d_neural) {
  if (templates.size() < 2) throw Error(ErrorCode::kInsufficientData, "fusion statistics need >= 2 users");
  std::vector<double> ged_pop, neural_pop;
  for (std::size_t u = 0; u < templates.size(); ++u) {
    for (int r : templates[u].references) {
      for (std::size_t v = 0; v < templates.size(); ++v) {
        if (v == u) continue;
        for (int s : templates[v].references) {
          ged_pop.push_back(normalized_score(d_ged(r, s), templates[u].delta_ged));
          neural_pop.push_back(normalized_score(d_neural(r, s), templates[u].delta_neural));
        }
      }
    }
  }
  const auto g = population_stats(ged_pop), n = population_stats(neural_pop);
  return {g.mean, g.stddev, n.mean, n.stddev, g.degenerate || n.degenerate};
}

/// min over references of the sum of both z-scored normalized scores.
inline double mcs_score(const UserTemplate& tpl, int t, const Dissimilarity& d_ged, const Dissimilarity& d_neural,
                        const FusionStats& stats) {
  double best = std::numeric_limits<double>::infinity();
  for (int r : tpl.references) {
    const double zg = (normalized_score(d_ged(r, t), tpl.delta_ged) - stats.mean_ged) / stats.std_ged;
    const double zn = (normalized_score(d_neural(r, t), tpl.delta_neural) - stats.mean_neural) / stats.std_neural;
    best = std::min(best, zg + zn);
  }
  return best;
}

enum class Decision { kAccept, kReject };

/// Accepts strictly below the threshold.
inline Decision decide(double score, double threshold) {
  return score < threshold ? Decision::kAccept : Decision::kReject;
}

}  // namespace sigver
