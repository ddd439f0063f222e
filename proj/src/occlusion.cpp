#include "ssflow/occlusion.hpp"

#include "ssflow/error.hpp"

namespace ssflow {

Mask consistency_occlusion(const Grid& d_fwd, const Grid& d_bwd, const ConsistencyParams& p) {
  require(d_fwd.same_shape(d_bwd) && d_fwd.channels() == 2,
          "consistency_occlusion: displacement fields must match and have 2 channels");
  require(p.alpha1 >= 0.0 && p.alpha2 >= 0.0, "consistency_occlusion: alphas must be >= 0");
  const int h = d_fwd.height();
  const int w = d_fwd.width();
  Mask out(h, w, false);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fx = d_fwd.at(y, x, 0);
      const double fy = d_fwd.at(y, x, 1);
      const BilinearStencil s = bilinear_stencil(h, w, x + fx, y + fy);
      if (!s.in_bounds()) continue;
      const double bx = interpolate(d_bwd, s, 0);
      const double by = interpolate(d_bwd, s, 1);
      const double rx = fx + bx;
      const double ry = fy + by;
      const double residual = rx * rx + ry * ry;
      const double bound = p.alpha1 * (fx * fx + fy * fy + bx * bx + by * by) + p.alpha2;
      out.set(y, x, !(residual > bound));
    }
  }
  return out;
}

std::map<ViewPair, Mask> occlusion_masks_for_reference(const FieldSet& fields, ViewId ref,
                                                       const ConsistencyParams& p) {
  const auto displacements = inverse_displacement(fields);
  std::map<ViewPair, Mask> out;
  for (PairKind k : kAllPairKinds) {
    const ViewId target = partner(ref, k);
    const auto& fwd = displacements.at({ref, target});
    const auto& bwd = displacements.at({target, ref});
    out[{ref, target}] = consistency_occlusion(fwd.values, bwd.values, p);
  }
  return out;
}

Mask fuse_masks(const std::map<ViewPair, Mask>& masks, ViewId ref) {
  Mask fused;
  bool first = true;
  for (PairKind k : kAllPairKinds) {
    const auto it = masks.find({ref, partner(ref, k)});
    require(it != masks.end(), "fuse_masks: missing pair mask");
    fused = first ? it->second : (fused & it->second);
    first = false;
  }
  return fused;
}

}  // namespace ssflow
