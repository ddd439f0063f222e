#include "ssflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssflow/error.hpp"
#include "ssflow/simd/kernels.hpp"

namespace ssflow {

Grid::Grid(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  require(height >= 0 && width >= 0 && channels >= 1, "grid: invalid dimensions");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Grid Grid::channel(int c) const {
  require(c >= 0 && c < channels_, "grid: channel index out of range");
  Grid out(height_, width_, 1);
  auto dst = out.data();
  for (std::size_t i = 0; i < pixel_count(); ++i) dst[i] = data_[i * channels_ + c];
  return out;
}

void Grid::set_channel(int c, const Grid& plane) {
  require(c >= 0 && c < channels_, "grid: channel index out of range");
  require(plane.same_dims(*this) && plane.channels() == 1, "grid: plane shape mismatch");
  auto src = plane.data();
  for (std::size_t i = 0; i < pixel_count(); ++i) data_[i * channels_ + c] = src[i];
}

bool Grid::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Mask::Mask(int height, int width, bool fill) : height_(height), width_(width) {
  require(height >= 0 && width >= 0, "mask: invalid dimensions");
  bits_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Mask Mask::operator&(const Mask& other) const {
  require(height_ == other.height_ && width_ == other.width_, "mask: dimension mismatch");
  Mask out = *this;
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & other.bits_[i];
  return out;
}

Mask Mask::operator|(const Mask& other) const {
  require(height_ == other.height_ && width_ == other.width_, "mask: dimension mismatch");
  Mask out = *this;
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] | other.bits_[i];
  return out;
}

Mask Mask::operator~() const {
  Mask out = *this;
  for (auto& b : out.bits_) b = b ? 0 : 1;
  return out;
}

double mask_iou(const Mask& a, const Mask& b) {
  const std::size_t inter = (a & b).count();
  const std::size_t uni = (a | b).count();
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

void clamp_axis(double v, int size, int& lo, int& hi, double& frac, bool& clamped) {
  const double upper = static_cast<double>(size - 1);
  clamped = !(v >= 0.0 && v <= upper);
  double c = v;
  if (std::isnan(c) || c < 0.0) c = 0.0;
  if (c > upper) c = upper;
  const double fl = std::floor(c);
  lo = static_cast<int>(fl);
  if (lo >= size - 1) {
    lo = size - 1;
    hi = lo;
    frac = 0.0;
  } else {
    hi = lo + 1;
    frac = c - fl;
  }
}

}  // namespace

BilinearStencil bilinear_stencil(int height, int width, double x, double y) {
  BilinearStencil s;
  clamp_axis(x, width, s.x0, s.x1, s.fx, s.clamped_x);
  clamp_axis(y, height, s.y0, s.y1, s.fy, s.clamped_y);
  return s;
}

double interpolate(const Grid& img, const BilinearStencil& s, int c) {
  const double a = img.at(s.y0, s.x0, c);
  const double b = img.at(s.y0, s.x1, c);
  const double cc = img.at(s.y1, s.x0, c);
  const double d = img.at(s.y1, s.x1, c);
  return (1.0 - s.fy) * ((1.0 - s.fx) * a + s.fx * b) + s.fy * ((1.0 - s.fx) * cc + s.fx * d);
}

void interpolate_gradient(const Grid& img, const BilinearStencil& s, int c, double& dx,
                          double& dy) {
  const double a = img.at(s.y0, s.x0, c);
  const double b = img.at(s.y0, s.x1, c);
  const double cc = img.at(s.y1, s.x0, c);
  const double d = img.at(s.y1, s.x1, c);
  dx = s.clamped_x ? 0.0 : (1.0 - s.fy) * (b - a) + s.fy * (d - cc);
  dy = s.clamped_y ? 0.0 : (1.0 - s.fx) * (cc - a) + s.fx * (d - b);
}

Sample bilinear_sample(const Grid& img, double x, double y) {
  require(!img.empty(), "bilinear_sample: empty image");
  const BilinearStencil s = bilinear_stencil(img.height(), img.width(), x, y);
  Sample out;
  out.in_bounds = s.in_bounds();
  out.value.resize(img.channels());
  for (int c = 0; c < img.channels(); ++c) out.value[c] = interpolate(img, s, c);
  return out;
}

WarpResult warp(const Grid& img, const Grid& displacement) {
  require(img.same_dims(displacement), "warp: image and displacement dimensions differ");
  require(displacement.channels() == 2, "warp: displacement must have two channels");
  WarpResult out{Grid(img.height(), img.width(), img.channels()), Mask(img.height(), img.width())};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const BilinearStencil s = bilinear_stencil(img.height(), img.width(),
                                                 x + displacement.at(y, x, 0),
                                                 y + displacement.at(y, x, 1));
      for (int c = 0; c < img.channels(); ++c) out.image.at(y, x, c) = interpolate(img, s, c);
      out.valid.set(y, x, s.in_bounds());
    }
  }
  return out;
}

ImageGrid downsample2(const ImageGrid& img) {
  require(!img.empty(), "downsample2: empty image");
  const int h = img.height();
  const int w = img.width();
  const int h2 = (h + 1) / 2;
  const int w2 = (w + 1) / 2;
  const std::size_t full = static_cast<std::size_t>(w / 2);
  const auto& k = simd::kernels();
  ImageGrid out(h2, w2, img.channels());
  std::vector<double> row(static_cast<std::size_t>(w2));
  for (int c = 0; c < img.channels(); ++c) {
    const Grid plane = img.channel(c);
    const auto src = plane.data();
    for (int y = 0; y < h2; ++y) {
      const double* r0 = src.data() + static_cast<std::size_t>(2 * y) * w;
      const double* r1 = src.data() + static_cast<std::size_t>(std::min(2 * y + 1, h - 1)) * w;
      k.box_down(r0, r1, row.data(), full);
      if (w % 2 == 1) {
        // odd width: the last box duplicates the border column
        const double top = r0[w - 1] + r0[w - 1];
        const double bottom = r1[w - 1] + r1[w - 1];
        row[full] = 0.25 * (top + bottom);
      }
      for (int x = 0; x < w2; ++x) out.at(y, x, c) = row[x];
    }
  }
  return out;
}

Pyramid build_pyramid(const ImageGrid& img, int levels) {
  require(levels >= 1, "build_pyramid: levels must be >= 1");
  require(!img.empty(), "build_pyramid: empty image");
  const double coarsest = std::min(img.height(), img.width()) / std::ldexp(1.0, levels - 1);
  require(coarsest >= 8.0, "build_pyramid: " + std::to_string(levels) +
                               " levels need min(H,W) >= " +
                               std::to_string(8 << (levels - 1)));
  Pyramid p;
  p.levels.push_back(img);
  for (int l = 1; l < levels; ++l) p.levels.push_back(downsample2(p.levels.back()));
  return p;
}

Grid hflip(const Grid& img) {
  Grid out(img.height(), img.width(), img.channels());
  const int w = img.width();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels(); ++c) out.at(y, x, c) = img.at(y, w - 1 - x, c);
  return out;
}

Mask hflip(const Mask& mask) {
  Mask out(mask.height(), mask.width());
  const int w = mask.width();
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < w; ++x) out.set(y, x, mask.at(y, w - 1 - x));
  return out;
}

}  // namespace ssflow
