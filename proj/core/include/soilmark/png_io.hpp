#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "soilmark/errors.hpp"

namespace soilmark {

// 8-bit raster image, row-major, channel-interleaved. channels: 1 (gray)
// or 3 (RGB).
struct ByteImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int col, int row, int ch = 0) const {
    return pixels[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
  std::uint8_t& at(int col, int row, int ch = 0) {
    return pixels[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
};

ByteImage make_byte_image(int width, int height, int channels);

// Non-interlaced Gray8/RGB8 PNG.
void write_png(const ByteImage& image, const std::filesystem::path& path);
ByteImage read_png(const std::filesystem::path& path);

}  // namespace soilmark
