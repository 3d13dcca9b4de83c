#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bihm {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

/// Binary PGM ("P5", maxval 255); each value in [0, 1] becomes
/// floor(255 * v + 0.5).
std::string encode_pgm(std::span<const double> image, int width, int height);
void write_pgm(std::span<const double> image, int width, int height, const std::filesystem::path& path);

/// Reads P5 files with maxval 255.
GrayImage read_pgm(const std::filesystem::path& path);

}  // namespace bihm
