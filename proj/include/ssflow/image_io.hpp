#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssflow/grid.hpp"

namespace ssflow {

/// Raw PNG samples without any gamma or range conversion.
struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 gray, 2 gray+alpha, 3 RGB, 4 RGBA
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint16_t> samples;  // row-major, interleaved

  std::uint16_t at(int y, int x, int c) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

RawPng read_png(const std::string& path);
void write_png(const std::string& path, const RawPng& png);

/// Load an 8-bit PNG or binary PGM/PPM into [0,1] intensities (1 or 3 channels).
ImageGrid load_image(const std::string& path);

/// luma = 0.299 R + 0.587 G + 0.114 B; single-channel inputs pass through.
ImageGrid to_grayscale(const ImageGrid& img);

/// Quantize [0,1] values to 8 bits (clamped, rounded) and write a PNG.
void save_png8(const std::string& path, const ImageGrid& img);
/// 0 = occluded, 255 = visible.
void save_mask_png(const std::string& path, const Mask& mask);
Mask load_mask_png(const std::string& path);

}  // namespace ssflow
