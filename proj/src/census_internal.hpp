#pragma once

#include <vector>

#include "ssflow/census.hpp"

namespace ssflow::detail {

/// Single-channel image extended by `r` clamped pixels on every side.
struct PaddedPlane {
  int height = 0;
  int width = 0;
  int r = 0;
  std::vector<double> data;  // (height + 2r) x (width + 2r)

  int stride() const { return width + 2 * r; }
  const double* row(int y, int dx = 0) const {
    return data.data() + static_cast<std::size_t>(y + r) * stride() + r + dx;
  }
};

PaddedPlane pad_clamped(const ImageGrid& img, int channel, int r);

/// Soft-census derivative planes d(entry_k)/d(neighbor - center), same layout
/// as CensusDescriptorGrid::planes.
std::vector<double> soft_census_derivatives(const PaddedPlane& pad, int patch, double sigma2);

CensusDescriptorGrid census_from_padded(const PaddedPlane& pad, const CensusParams& p);

}  // namespace ssflow::detail
