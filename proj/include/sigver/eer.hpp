#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sigver/error.hpp"
#include "sigver/scoring.hpp"

namespace sigver {

struct DetPoint {
  double threshold = 0.0;
  double far = 0.0;  // fraction of forgery scores < threshold
  double frr = 0.0;  // fraction of genuine scores >= threshold
};

/// Operating points ordered by increasing threshold.
struct DetCurve {
  std::vector<DetPoint> points;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  DetCurve det;
};

/// Sweeps every observed score plus one value above the maximum as
/// threshold and locates the FAR/FRR crossing, interpolating linearly
/// between the two operating points that bracket it.
inline EerResult compute_eer(std::span<const double> genuine, std::span<const double> forgery) {
  if (genuine.empty() || forgery.empty()) throw Error(ErrorCode::kEmptyScoreList, "compute_eer needs both lists");
  std::vector<double> g(genuine.begin(), genuine.end()), f(forgery.begin(), forgery.end());
  for (double v : g)
    if (std::isnan(v)) throw Error(ErrorCode::kInvalidArgument, "NaN score");
  for (double v : f)
    if (std::isnan(v)) throw Error(ErrorCode::kInvalidArgument, "NaN score");
  std::sort(g.begin(), g.end());
  std::sort(f.begin(), f.end());
  std::vector<double> thresholds(g);
  thresholds.insert(thresholds.end(), f.begin(), f.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::nextafter(thresholds.back(), std::numeric_limits<double>::infinity()));

  EerResult out;
  const double ng = static_cast<double>(g.size()), nf = static_cast<double>(f.size());
  for (double t : thresholds) {
    const auto accepted_forgeries = std::lower_bound(f.begin(), f.end(), t) - f.begin();
    const auto accepted_genuine = std::lower_bound(g.begin(), g.end(), t) - g.begin();
    out.det.points.push_back({t, accepted_forgeries / nf, (ng - accepted_genuine) / ng});
  }
  const auto& pts = out.det.points;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (pts[k].far < pts[k].frr) continue;
    if (pts[k].far == pts[k].frr || k == 0) {
      out.eer = pts[k].far;
      out.threshold = pts[k].threshold;
    } else {
      const auto& a = pts[k - 1];
      const auto& b = pts[k];
      const double d0 = a.frr - a.far, d1 = b.far - b.frr;
      const double w = d0 / (d0 + d1);
      out.eer = a.far + w * (b.far - a.far);
      out.threshold = a.threshold + w * (b.threshold - a.threshold);
    }
    return out;
  }
  return out;  // unreachable: the last point has FAR = 1, FRR = 0
}

/// Genuine and forgery scores of one claimed identity.
struct UserScores {
  std::vector<double> genuine;
  std::vector<double> forgery;
};

struct UserNormResult {
  std::vector<UserScores> normalized;
  std::vector<double> thresholds;
  double pooled_eer = 0.0;
};

/// Divides each user's scores by that user's own EER threshold so every
/// user's equal-error operating point sits at 1, then pools.
inline UserNormResult aposteriori_user_norm(std::span<const UserScores> users) {
  UserNormResult out;
  std::vector<double> pooled_g, pooled_f;
  for (std::size_t i = 0; i < users.size(); ++i) {
    const auto& u = users[i];
    const double theta = compute_eer(u.genuine, u.forgery).threshold;
    if (!(theta > kScoreEpsilon)) {
      throw Error(ErrorCode::kDegenerateUser, "user #" + std::to_string(i) + " has EER threshold " +
                                                  std::to_string(theta) + "; normalization needs a positive one");
    }
    UserScores n;
    for (double v : u.genuine) n.genuine.push_back(v / theta);
    for (double v : u.forgery) n.forgery.push_back(v / theta);
    pooled_g.insert(pooled_g.end(), n.genuine.begin(), n.genuine.end());
    pooled_f.insert(pooled_f.end(), n.forgery.begin(), n.forgery.end());
    out.thresholds.push_back(theta);
    out.normalized.push_back(std::move(n));
  }
  out.pooled_eer = compute_eer(pooled_g, pooled_f).eer;
  return out;
}

}  // namespace sigver
