#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "sigver/image.hpp"

namespace sigver {

struct Binarization {
  BinaryImage ink;
  /// Pixels strictly darker than this value are ink. 0 when `uniform`.
  int threshold = 0;
  /// Set when the image has a single intensity class; `ink` is then empty.
  bool uniform = false;
};

/// Otsu threshold over thresholds t in [1, 255] splitting {v < t} from
/// {v >= t}. Returns nullopt for images with a single intensity.
/// Ties resolve to the smallest t.
inline std::optional<int> otsu_threshold(const GrayImage& image) {
  std::array<double, 256> hist{};
  for (auto v : image.pixels) hist[v] += 1.0;
  const double total = static_cast<double>(image.pixels.size());
  double sum_all = 0.0;
  for (int v = 0; v < 256; ++v) sum_all += v * hist[v];

  double n0 = 0.0, s0 = 0.0, best = 0.0;
  std::optional<int> best_t;
  for (int t = 1; t < 256; ++t) {
    n0 += hist[t - 1];
    s0 += (t - 1) * hist[t - 1];
    const double n1 = total - n0;
    if (n0 == 0.0 || n1 == 0.0) continue;
    const double m0 = s0 / n0;
    const double m1 = (sum_all - s0) / n1;
    const double between = (n0 / total) * (n1 / total) * (m0 - m1) * (m0 - m1);
    if (!best_t || between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

inline Binarization binarize(const GrayImage& image) {
  Binarization out{BinaryImage(image.width, image.height), 0, false};
  const auto t = otsu_threshold(image);
  if (!t) {
    out.uniform = true;
    return out;
  }
  out.threshold = *t;
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    out.ink.bits[i] = image.pixels[i] < *t ? 1 : 0;
  }
  return out;
}

namespace detail {

// Neighbors P2..P9 in Zhang-Suen numbering (north, then clockwise).
inline std::array<bool, 8> ring(const Mask& m, int x, int y) {
  std::array<bool, 8> p{};
  for (int k = 0; k < 8; ++k) p[k] = m.get(x + kNeighborDx[k], y + kNeighborDy[k]);
  return p;
}

inline int transitions(const std::array<bool, 8>& p) {
  int a = 0;
  for (int k = 0; k < 8; ++k) a += !p[k] && p[(k + 1) % 8];
  return a;
}

// One Zhang-Suen sub-iteration; returns the number of deleted pixels.
inline std::size_t zhang_suen_pass(Mask& m, bool first) {
  std::vector<std::size_t> doomed;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m.at(x, y)) continue;
      const auto p = ring(m, x, y);
      int b = 0;
      for (bool v : p) b += v;
      if (b < 2 || b > 6 || transitions(p) != 1) continue;
      // p[0]=P2 (N), p[2]=P4 (E), p[4]=P6 (S), p[6]=P8 (W)
      const bool c1 = first ? !(p[0] && p[2] && p[4]) : !(p[0] && p[2] && p[6]);
      const bool c2 = first ? !(p[2] && p[4] && p[6]) : !(p[0] && p[4] && p[6]);
      if (c1 && c2) doomed.push_back(static_cast<std::size_t>(y) * m.width + x);
    }
  }
  for (auto i : doomed) m.bits[i] = 0;
  return doomed.size();
}

// Number of 8-connected components formed by the set pixels of the ring,
// using adjacency within the 3x3 window only.
inline int ring_components(const std::array<bool, 8>& p) {
  std::array<int, 8> label{};
  label.fill(-1);
  int comps = 0;
  for (int s = 0; s < 8; ++s) {
    if (!p[s] || label[s] >= 0) continue;
    std::vector<int> stack{s};
    label[s] = comps;
    while (!stack.empty()) {
      const int k = stack.back();
      stack.pop_back();
      for (int j = 0; j < 8; ++j) {
        if (!p[j] || label[j] >= 0) continue;
        const int dx = kNeighborDx[k] - kNeighborDx[j];
        const int dy = kNeighborDy[k] - kNeighborDy[j];
        if (dx >= -1 && dx <= 1 && dy >= -1 && dy <= 1) {
          label[j] = comps;
          stack.push_back(j);
        }
      }
    }
    ++comps;
  }
  return comps;
}

// Zhang-Suen leaves staircase corners whose pixels have three neighbors.
// Removes, in scan order, non-end pixels with 2 or 3 neighbors that all
// belong to one local component; such removals keep 8-connectivity.
inline std::size_t remove_staircases(Mask& m) {
  std::size_t removed = 0;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m.at(x, y)) continue;
      const auto p = ring(m, x, y);
      int b = 0;
      for (bool v : p) b += v;
      if (b < 2 || b > 3) continue;
      if (ring_components(p) != 1) continue;
      // Only corners with a 4-adjacent pair (N/E, E/S, S/W, W/N) qualify;
      // this keeps the tips of diagonal end segments intact.
      const bool corner = (p[0] && p[2]) || (p[2] && p[4]) || (p[4] && p[6]) || (p[6] && p[0]);
      if (!corner) continue;
      m.set(x, y, false);
      ++removed;
    }
  }
  return removed;
}

}  // namespace detail

/// Zhang-Suen thinning to a fixpoint followed by staircase removal,
/// repeated until nothing changes. Pixels outside the image are background.
inline SkeletonImage skeletonize(const BinaryImage& binary) {
  SkeletonImage skel(binary.width, binary.height);
  skel.bits = binary.bits;
  for (;;) {
    for (;;) {
      const std::size_t a = detail::zhang_suen_pass(skel, true);
      const std::size_t b = detail::zhang_suen_pass(skel, false);
      if (a + b == 0) break;
    }
    if (detail::remove_staircases(skel) == 0) break;
  }
  return skel;
}

inline SkeletonImage skeletonize(const GrayImage& image) { return skeletonize(binarize(image).ink); }

}  // namespace sigver
