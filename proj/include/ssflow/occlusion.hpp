#pragma once

#include <map>

#include "ssflow/geometry.hpp"
#include "ssflow/grid.hpp"

namespace ssflow {

struct ConsistencyParams {
  double alpha1 = 0.01;
  double alpha2 = 0.5;  // px^2
};

/// Forward-backward consistency check.
///
/// With b(x) = d_bwd sampled bilinearly at x + d_fwd(x), a pixel is occluded
/// (0) iff |d_fwd + b|^2 > alpha1 (|d_fwd|^2 + |b|^2) + alpha2, or the lookup
/// leaves the image. `d_bwd` lives in the target image's pixel grid.
Mask consistency_occlusion(const Grid& d_fwd, const Grid& d_bwd, const ConsistencyParams& p);

/// One mask per pair (ref, partner) for the three partners of `ref`, built
/// from the forward displacement of fields[ref] and the inverse read from
/// the partner's own field. Requires all four fields.
std::map<ViewPair, Mask> occlusion_masks_for_reference(const FieldSet& fields, ViewId ref,
                                                       const ConsistencyParams& p);

/// Pixel visible in every pair of `ref` (diagnostic fusion of per-pair masks).
Mask fuse_masks(const std::map<ViewPair, Mask>& masks, ViewId ref);

}  // namespace ssflow
