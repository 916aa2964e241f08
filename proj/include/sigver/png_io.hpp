#pragma once

#include <png.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sigver/error.hpp"
#include "sigver/image.hpp"

namespace sigver {

/// Reads an 8-bit gray or color PNG. Color pixels are reduced to the
/// unweighted average of their channels.
inline GrayImage read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kMissingFile, path.string());
  }
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw Error(ErrorCode::kIoError, path.string() + ": " + img.message);
  }
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(ErrorCode::kIoError, path.string() + ": " + img.message);
  }
  GrayImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!color) {
    out.pixels = std::move(buffer);
  } else {
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
      const int sum = buffer[3 * i] + buffer[3 * i + 1] + buffer[3 * i + 2];
      out.pixels[i] = static_cast<std::uint8_t>((sum + 1) / 3);
    }
  }
  return out;
}

inline void write_png(const std::filesystem::path& path, const GrayImage& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIoError, path.string() + ": " + img.message);
  }
}

/// Writes a mask as black ink (true) on white.
inline void write_png(const std::filesystem::path& path, const Mask& mask) {
  GrayImage g(mask.width, mask.height);
  for (std::size_t i = 0; i < g.pixels.size(); ++i) g.pixels[i] = mask.bits[i] ? 0 : 255;
  write_png(path, g);
}

}  // namespace sigver
