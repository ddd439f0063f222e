#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ssflow/grid.hpp"

namespace ssflow {

enum class CensusMode { Hard, Soft };

struct CensusParams {
  int patch = 3;                 // odd, >= 3
  CensusMode mode = CensusMode::Soft;
  double sigma2 = 0.81;          // soft-mode squashing constant
  double tau = 0.0;              // hard-mode ternary threshold
  double soft_hamming_c = 0.1;   // q = e^2 / (c + e^2)
};

struct CharbonnierParams {
  double epsilon = 0.001;
  double gamma = 0.45;
};

/// rho(x) = (x^2 + eps^2)^gamma
double charbonnier(double x, const CharbonnierParams& p);
double charbonnier_derivative(double x, const CharbonnierParams& p);
/// Derivative given rho = charbonnier(x, p), without a second pow.
inline double charbonnier_derivative_from_value(double x, double rho, const CharbonnierParams& p) {
  return 2.0 * p.gamma * x * rho / (x * x + p.epsilon * p.epsilon);
}

/// Per-pixel ternary descriptors, stored as one H x W plane per neighbor.
struct CensusDescriptorGrid {
  int height = 0;
  int width = 0;
  int patch = 3;
  CensusMode mode = CensusMode::Soft;
  std::vector<double> planes;  // entries() planes of height*width

  int entries() const { return patch * patch - 1; }
  std::span<const double> plane(int k) const {
    const std::size_t n = static_cast<std::size_t>(height) * width;
    return {planes.data() + k * n, n};
  }
  double at(int k, int y, int x) const {
    return planes[static_cast<std::size_t>(k) * height * width +
                  static_cast<std::size_t>(y) * width + x];
  }
};

/// Neighbor offsets (dx, dy) in row-major patch order, center excluded.
std::vector<std::pair<int, int>> census_offsets(int patch);

/// Hard: sign(I(n) - I(c)) with |I(n) - I(c)| <= tau mapped to 0.
/// Soft: (I(n) - I(c)) / sqrt(sigma2 + (I(n) - I(c))^2).
/// Neighborhoods are clamped at the border.
CensusDescriptorGrid census_transform(const ImageGrid& img, const CensusParams& p);

/// Hard: count of differing entries. Soft: sum of (a-b)^2 / (c + (a-b)^2).
ScalarField census_distance(const CensusDescriptorGrid& a, const CensusDescriptorGrid& b,
                            double soft_hamming_c = 0.1);

struct PhotometricResult {
  ScalarField residual;  // rho(census distance); 0 where the warp left the image
  ScalarField distance;
  Mask valid;            // warp validity
};

/// Warp `target` toward `source` by d, census both, and penalize the
/// per-pixel census distance with the Charbonnier function. Multi-channel
/// images are census-transformed per channel with distances summed.
PhotometricResult photometric_residual(const ImageGrid& source, const ImageGrid& target,
                                       const Grid& displacement, const CensusParams& census,
                                       const CharbonnierParams& rho);

}  // namespace ssflow
