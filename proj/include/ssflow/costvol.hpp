#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ssflow/grid.hpp"

namespace ssflow {

/// Channel-planar feature maps.
struct FeatureGrid {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> planes;  // channels x height x width

  FeatureGrid() = default;
  FeatureGrid(int h, int w, int c) : height(h), width(w), channels(c), planes(static_cast<std::size_t>(h) * w * c) {}

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  std::span<double> plane(int c) { return {planes.data() + c * plane_size(), plane_size()}; }
  std::span<const double> plane(int c) const { return {planes.data() + c * plane_size(), plane_size()}; }
  double& at(int c, int y, int x) { return planes[c * plane_size() + static_cast<std::size_t>(y) * width + x]; }
  double at(int c, int y, int x) const { return planes[c * plane_size() + static_cast<std::size_t>(y) * width + x]; }
};

/// Scores for integer displacements in [-r, r]^2, ordered row-major over
/// (dy, dx): index = (dy + r) * (2r + 1) + (dx + r).
struct CostVolume {
  int height = 0;
  int width = 0;
  int radius = 0;
  std::vector<double> scores;  // displacement-major planes

  int displacements() const { return (2 * radius + 1) * (2 * radius + 1); }
  double at(int y, int x, int k) const {
    return scores[static_cast<std::size_t>(k) * height * width + static_cast<std::size_t>(y) * width + x];
  }
  std::pair<int, int> offset(int k) const {
    const int side = 2 * radius + 1;
    return {k % side - radius, k / side - radius};
  }
};

/// Intensity plus horizontal and vertical central differences (clamped border).
FeatureGrid extract_features(const ImageGrid& img);

/// Per-channel spatial standardization: (F - mean) / (std + 1e-8).
FeatureGrid normalize_features(const FeatureGrid& f);

/// Scales every pixel's feature vector to unit length (zero vectors stay zero),
/// so correlation becomes cosine similarity.
FeatureGrid unit_normalize_pixels(const FeatureGrid& f);

/// cost(x, d) = <F1(x), F2(x + d)> / C; targets outside the image are zero vectors.
CostVolume correlation_volume(const FeatureGrid& f1, const FeatureGrid& f2, int radius);

struct ArgmaxMap {
  Grid displacement;  // 2 channels (dx, dy), integer valued
  ScalarField score;
};

/// Best displacement per pixel; ties resolve to the lowest index.
ArgmaxMap cost_argmax(const CostVolume& v);

}  // namespace ssflow
