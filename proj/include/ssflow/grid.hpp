#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ssflow {

/// Dense row-major grid with interleaved channels.
///
/// Used for images (intensities in [0,1] on ingestion), scalar loss maps,
/// displacement fields (2 channels) and scene-flow fields (4 channels).
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, int channels = 1, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const { return data_.empty(); }

  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_dims(const Grid& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool same_shape(const Grid& other) const {
    return same_dims(other) && channels_ == other.channels_;
  }

  /// Copy of one channel as a single-channel grid.
  Grid channel(int c) const;
  void set_channel(int c, const Grid& plane);

  bool all_finite() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

using ImageGrid = Grid;
using ScalarField = Grid;

/// Binary per-pixel mask. For occlusion masks 1 means visible.
class Mask {
 public:
  Mask() = default;
  Mask(int height, int width, bool fill = true);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixel_count() const { return bits_.size(); }

  bool at(int y, int x) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int y, int x, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

  std::size_t count() const;
  bool all() const { return count() == bits_.size(); }
  bool none() const { return count() == 0; }

  Mask operator&(const Mask& other) const;
  Mask operator|(const Mask& other) const;
  Mask operator~() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Intersection-over-union of two masks' set pixels; 1 when both are empty.
double mask_iou(const Mask& a, const Mask& b);

struct Pyramid {
  std::vector<ImageGrid> levels;  // level 0 = full resolution
};

/// Clamped bilinear stencil for one sample position.
struct BilinearStencil {
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  double fx = 0.0, fy = 0.0;
  bool clamped_x = false;
  bool clamped_y = false;
  bool in_bounds() const { return !clamped_x && !clamped_y; }
};

BilinearStencil bilinear_stencil(int height, int width, double x, double y);
double interpolate(const Grid& img, const BilinearStencil& s, int c);
/// d(value)/dx, d(value)/dy of the clamped interpolant; zero along a clamped axis.
void interpolate_gradient(const Grid& img, const BilinearStencil& s, int c, double& dx, double& dy);

struct Sample {
  std::vector<double> value;
  bool in_bounds = false;
};

/// Bilinear interpolation with coordinates clamped to [0,W-1]x[0,H-1].
Sample bilinear_sample(const Grid& img, double x, double y);

struct WarpResult {
  ImageGrid image;
  Mask valid;
};

/// Backward warp: out(x) = img(x + d(x)). `displacement` has two channels (dx, dy).
WarpResult warp(const Grid& img, const Grid& displacement);

/// 2x2 box-filtered stride-2 pyramid; requires min(H,W) / 2^(levels-1) >= 8.
Pyramid build_pyramid(const ImageGrid& img, int levels);
ImageGrid downsample2(const ImageGrid& img);

/// Mirror along the x axis: out(x,y) = img(W-1-x, y).
Grid hflip(const Grid& img);
Mask hflip(const Mask& mask);

}  // namespace ssflow
