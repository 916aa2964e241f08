#pragma once

#include <algorithm>

#include "sigver/keypoint_graph.hpp"
#include "sigver/lsap.hpp"
#include "sigver/preprocess.hpp"

namespace sigver {

/// Node and edge deletion/insertion costs.
struct CostParams {
  double c_node = 25.0;
  double c_edge = 45.0;
};

struct GedResult {
  double lower_bound = 0.0;
  double max_ged = 0.0;
  double normalized = 0.0;
  /// Exactly one of the two graphs was empty.
  bool degenerate = false;
};

/// Bipartite matrix of size (n1+n2): substitutions top-left, deletions on
/// the top-right diagonal, insertions on the bottom-left diagonal, zeros
/// bottom-right. Edge costs enter as half the local degree difference so
/// that the assignment cost bounds the exact edit distance from below.
inline CostMatrix build_cost_matrix(const KeypointGraph& g1, const KeypointGraph& g2, const CostParams& p) {
  const int n1 = g1.node_count(), n2 = g2.node_count();
  CostMatrix m(n1 + n2, 0.0);
  const double half_edge = p.c_edge / 2.0;
  for (int u = 0; u < n1; ++u) {
    for (int v = 0; v < n2; ++v) {
      m(u, v) = distance(g1.label(u), g2.label(v)) + half_edge * std::abs(g1.degree(u) - g2.degree(v));
    }
    for (int k = 0; k < n1; ++k) {
      m(u, n2 + k) = (k == u) ? p.c_node + half_edge * g1.degree(u) : kForbiddenCost;
    }
  }
  for (int v = 0; v < n2; ++v) {
    for (int k = 0; k < n2; ++k) {
      m(n1 + k, v) = (k == v) ? p.c_node + half_edge * g2.degree(v) : kForbiddenCost;
    }
  }
  return m;
}

inline double ged_lower_bound(const KeypointGraph& g1, const KeypointGraph& g2, const CostParams& p) {
  return solve(build_cost_matrix(g1, g2, p)).total_cost;
}

/// Cost of deleting all of g1 and inserting all of g2.
inline double ged_max(const KeypointGraph& g1, const KeypointGraph& g2, const CostParams& p) {
  return (g1.node_count() + g2.node_count()) * p.c_node + (g1.edge_count() + g2.edge_count()) * p.c_edge;
}

inline GedResult ged(const KeypointGraph& g1, const KeypointGraph& g2, const CostParams& p) {
  GedResult r;
  r.max_ged = ged_max(g1, g2, p);
  if (g1.empty() && g2.empty()) return r;
  r.lower_bound = ged_lower_bound(g1, g2, p);
  if (g1.empty() != g2.empty()) {
    r.degenerate = true;
    r.normalized = 1.0;
    return r;
  }
  r.normalized = r.max_ged > 0.0 ? std::clamp(r.lower_bound / r.max_ged, 0.0, 1.0) : 0.0;
  return r;
}

/// Normalized graph dissimilarity in [0, 1].
inline double dissimilarity_ged(const KeypointGraph& g1, const KeypointGraph& g2, const CostParams& p) {
  return ged(g1, g2, p).normalized;
}

inline KeypointGraph graph_from_image(const GrayImage& image, const GraphExtractionParams& extraction = {}) {
  return build_graph(skeletonize(binarize(image).ink), extraction);
}

inline GedResult ged(const GrayImage& r, const GrayImage& t, const CostParams& p,
                     const GraphExtractionParams& extraction = {}) {
  return ged(graph_from_image(r, extraction), graph_from_image(t, extraction), p);
}

inline double dissimilarity_ged(const GrayImage& r, const GrayImage& t, const CostParams& p,
                                const GraphExtractionParams& extraction = {}) {
  return ged(r, t, p, extraction).normalized;
}

}  // namespace sigver
