#pragma once

#include <cstdint>
#include <vector>

#include "sigver/error.hpp"

namespace sigver {

/// Row-major 8-bit grayscale raster. 0 is black, 255 is white.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 255)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
    if (w <= 0 || h <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive");
    }
  }

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const GrayImage&) const = default;
};

/// Row-major boolean mask. Used both for binarized ink and for skeletons.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  /// Out-of-bounds reads are background.
  bool get(int x, int y) const { return contains(x, y) && at(x, y); }
  void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }
  bool empty() const { return count() == 0; }

  bool operator==(const Mask&) const = default;
};

/// Ink mask produced by binarization; true = ink.
struct BinaryImage : Mask {
  using Mask::Mask;
};

/// One-pixel-wide skeleton mask; true = skeleton pixel.
struct SkeletonImage : Mask {
  using Mask::Mask;
};

// 8-neighborhood offsets in clockwise order starting north.
inline constexpr int kNeighborDx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
inline constexpr int kNeighborDy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

inline int count_neighbors(const Mask& m, int x, int y) {
  int n = 0;
  for (int k = 0; k < 8; ++k) n += m.get(x + kNeighborDx[k], y + kNeighborDy[k]);
  return n;
}

}  // namespace sigver
