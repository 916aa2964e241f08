#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "sigver/error.hpp"
#include "sigver/image.hpp"

namespace sigver {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Undirected edge stored with first < second.
using Edge = std::pair<int, int>;

/// Graph with centered 2-D coordinate node labels and unlabeled undirected
/// edges. Immutable once constructed.
class KeypointGraph {
 public:
  KeypointGraph() = default;

  /// Labels are translated so that their mean is the origin. Duplicate
  /// edges are collapsed; self-loops and dangling ids are rejected.
  KeypointGraph(std::vector<Point2> labels, std::vector<Edge> edges)
      : labels_(std::move(labels)), edges_(std::move(edges)) {
    const int n = static_cast<int>(labels_.size());
    for (auto& [a, b] : edges_) {
      if (a < 0 || b < 0 || a >= n || b >= n) {
        throw Error(ErrorCode::kInvalidArgument, "edge references a missing node");
      }
      if (a == b) throw Error(ErrorCode::kInvalidArgument, "self-loop");
      if (a > b) std::swap(a, b);
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    degrees_.assign(labels_.size(), 0);
    for (const auto& [a, b] : edges_) {
      ++degrees_[a];
      ++degrees_[b];
    }
    if (n > 0) {
      double mx = 0.0, my = 0.0;
      for (const auto& p : labels_) {
        mx += p.x;
        my += p.y;
      }
      mx /= n;
      my /= n;
      for (auto& p : labels_) {
        p.x -= mx;
        p.y -= my;
      }
    }
  }

  int node_count() const { return static_cast<int>(labels_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  bool empty() const { return labels_.empty(); }
  const std::vector<Point2>& labels() const { return labels_; }
  const Point2& label(int v) const { return labels_[v]; }
  const std::vector<Edge>& edges() const { return edges_; }
  int degree(int v) const { return degrees_[v]; }

  bool has_edge(int a, int b) const {
    if (a > b) std::swap(a, b);
    return std::binary_search(edges_.begin(), edges_.end(), Edge{a, b});
  }

 private:
  std::vector<Point2> labels_;
  std::vector<Edge> edges_;
  std::vector<int> degrees_;
};

struct GraphExtractionParams {
  /// Sampling interval along skeleton branches, in pixels.
  double sampling_d = 25.0;
};

enum class KeypointRole { kEnd, kJunction, kSampled };

struct Keypoint {
  Point2 position;  // pixel coordinates, x = column, y = row
  KeypointRole role;
};

/// Keypoints plus connectivity before centering, and the pixel runs each
/// traced branch visited (row-major pixel indices, including the structural
/// pixels at either end).
struct SkeletonTrace {
  std::vector<Keypoint> keypoints;
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> branches;
};

namespace detail {

class SkeletonTracer {
 public:
  SkeletonTracer(const SkeletonImage& skel, double sampling_d)
      : skel_(skel), d_(sampling_d),
        node_of_(skel.bits.size(), -1),
        visited_(skel.bits.size(), 0),
        degree_(skel.bits.size(), 0) {
    if (!(sampling_d > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "sampling interval must be positive");
    }
  }

  SkeletonTrace run() {
    const int w = skel_.width, h = skel_.height;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (skel_.at(x, y)) degree_[index(x, y)] = count_neighbors(skel_, x, y);

    create_structural_nodes();
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (node_of_[index(x, y)] >= 0 && !is_sampled_node(index(x, y))) trace_from(x, y);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (skel_.at(x, y) && !visited_[index(x, y)] && node_of_[index(x, y)] < 0) trace_loop(x, y);
    return std::move(out_);
  }

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * skel_.width + x; }
  int px(std::size_t i) const { return static_cast<int>(i % skel_.width); }
  int py(std::size_t i) const { return static_cast<int>(i / skel_.width); }
  bool structural(std::size_t i) const { return degree_[i] <= 1 || degree_[i] >= 3; }
  bool is_sampled_node(std::size_t i) const {
    return out_.keypoints[node_of_[i]].role == KeypointRole::kSampled;
  }

  int add_node(Point2 p, KeypointRole role) {
    out_.keypoints.push_back({p, role});
    return static_cast<int>(out_.keypoints.size()) - 1;
  }

  void add_edge(int a, int b) {
    if (a == b) return;
    if (a > b) std::swap(a, b);
    if (std::find(out_.edges.begin(), out_.edges.end(), Edge{a, b}) == out_.edges.end()) {
      out_.edges.emplace_back(a, b);
    }
  }

  // End pixels become nodes; 8-connected clusters of junction pixels merge
  // into one node at their centroid.
  void create_structural_nodes() {
    for (int y = 0; y < skel_.height; ++y) {
      for (int x = 0; x < skel_.width; ++x) {
        const auto i = index(x, y);
        if (!skel_.at(x, y) || node_of_[i] >= 0 || !structural(i)) continue;
        visited_[i] = 1;
        if (degree_[i] <= 1) {
          node_of_[i] = add_node({double(x), double(y)}, KeypointRole::kEnd);
          continue;
        }
        std::vector<std::size_t> cluster{i}, stack{i};
        node_of_[i] = static_cast<int>(out_.keypoints.size());
        while (!stack.empty()) {
          const auto c = stack.back();
          stack.pop_back();
          for (int k = 0; k < 8; ++k) {
            const int nx = px(c) + kNeighborDx[k], ny = py(c) + kNeighborDy[k];
            if (!skel_.get(nx, ny)) continue;
            const auto j = index(nx, ny);
            if (degree_[j] < 3 || node_of_[j] >= 0) continue;
            node_of_[j] = node_of_[i];
            visited_[j] = 1;
            cluster.push_back(j);
            stack.push_back(j);
          }
        }
        Point2 c{};
        for (auto j : cluster) {
          c.x += px(j);
          c.y += py(j);
        }
        c.x /= static_cast<double>(cluster.size());
        c.y /= static_cast<double>(cluster.size());
        add_node(c, KeypointRole::kJunction);
      }
    }
    for (std::size_t i = 0; i < degree_.size(); ++i) {
      if (skel_.bits[i] && degree_[i] == 0) out_.branches.push_back({i});
    }
  }

  static double step_length(int dx, int dy) { return (dx != 0 && dy != 0) ? std::numbers::sqrt2 : 1.0; }

  // Walks a branch starting at `start` through `first`. Samples are placed
  // on the first pixel whose traversed length reaches each multiple of D.
  void walk(std::size_t start, std::size_t first, int start_node, std::size_t stop_at) {
    std::vector<std::size_t> pixels{start};
    std::size_t prev = start, cur = first;
    double length = step_length(px(cur) - px(prev), py(cur) - py(prev));
    double next_mark = d_;
    int last_node = start_node;
    const std::size_t guard = skel_.bits.size() + 1;
    for (std::size_t steps = 0; steps < guard; ++steps) {
      if (cur == stop_at || node_of_[cur] >= 0) {
        pixels.push_back(cur);
        add_edge(last_node, node_of_[cur]);
        break;
      }
      visited_[cur] = 1;
      pixels.push_back(cur);
      if (length >= next_mark) {
        const int s = add_node({double(px(cur)), double(py(cur))}, KeypointRole::kSampled);
        node_of_[cur] = s;
        add_edge(last_node, s);
        last_node = s;
        while (next_mark <= length) next_mark += d_;
      }
      std::size_t next = cur;
      for (int k = 0; k < 8; ++k) {
        const int nx = px(cur) + kNeighborDx[k], ny = py(cur) + kNeighborDy[k];
        if (!skel_.get(nx, ny)) continue;
        const auto j = index(nx, ny);
        if (j == prev || j == cur) continue;
        if (j == stop_at || (node_of_[j] >= 0 && !is_sampled_node(j)) || !visited_[j]) {
          next = j;
          break;
        }
      }
      if (next == cur) break;
      length += step_length(px(next) - px(cur), py(next) - py(cur));
      prev = cur;
      cur = next;
    }
    out_.branches.push_back(std::move(pixels));
  }

  void trace_from(int x, int y) {
    const auto s = index(x, y);
    for (int k = 0; k < 8; ++k) {
      const int nx = x + kNeighborDx[k], ny = y + kNeighborDy[k];
      if (!skel_.get(nx, ny)) continue;
      const auto j = index(nx, ny);
      if (structural(j)) {
        if (node_of_[j] != node_of_[s]) {
          add_edge(node_of_[s], node_of_[j]);
          if (s < j) out_.branches.push_back({s, j});
        }
        continue;
      }
      if (visited_[j]) continue;
      walk(s, j, node_of_[s], s);
    }
  }

  // Closed loop without structural pixels, anchored at its first pixel in
  // row-major order.
  void trace_loop(int x, int y) {
    const auto a = index(x, y);
    visited_[a] = 1;
    node_of_[a] = add_node({double(x), double(y)}, KeypointRole::kSampled);
    for (int k = 0; k < 8; ++k) {
      const int nx = x + kNeighborDx[k], ny = y + kNeighborDy[k];
      if (!skel_.get(nx, ny)) continue;
      const auto j = index(nx, ny);
      if (visited_[j]) continue;
      walk(a, j, node_of_[a], a);
      return;
    }
    out_.branches.push_back({a});
  }

  const SkeletonImage& skel_;
  double d_;
  std::vector<int> node_of_;
  std::vector<std::uint8_t> visited_;
  std::vector<int> degree_;
  SkeletonTrace out_;
};

}  // namespace detail

inline SkeletonTrace trace_skeleton(const SkeletonImage& skeleton, const GraphExtractionParams& params = {}) {
  return detail::SkeletonTracer(skeleton, params.sampling_d).run();
}

/// End-points, junction points and equidistant samples of the skeleton, in
/// pixel coordinates.
inline std::vector<Keypoint> extract_keypoints(const SkeletonImage& skeleton,
                                               const GraphExtractionParams& params = {}) {
  return trace_skeleton(skeleton, params).keypoints;
}

inline KeypointGraph build_graph(const SkeletonImage& skeleton, const GraphExtractionParams& params = {}) {
  auto trace = trace_skeleton(skeleton, params);
  std::vector<Point2> labels;
  labels.reserve(trace.keypoints.size());
  for (const auto& k : trace.keypoints) labels.push_back(k.position);
  return KeypointGraph(std::move(labels), std::move(trace.edges));
}

}  // namespace sigver
