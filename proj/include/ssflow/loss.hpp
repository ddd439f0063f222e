#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ssflow/census.hpp"
#include "ssflow/geometry.hpp"
#include "ssflow/grid.hpp"

namespace ssflow {

struct LossWeights {
  double lambda_occ = 12.4;
  double lambda_smooth = 3.0;
};

struct LossConfig {
  CensusParams census;
  CharbonnierParams rho;
  LossWeights weights;
};

using MaskSet = std::map<ViewPair, Mask>;
using GradientField = Grid;  // 4 channels, same layout as SceneFlowField::values
using GradientSet = std::map<ViewId, GradientField>;

/// Masks with every pixel visible for the three pairs of each view in `refs`.
MaskSet all_visible_masks(const std::set<ViewId>& refs, int height, int width);

struct LossBreakdown {
  double total = 0.0;
  std::map<ViewPair, double> per_pair;      // photometric part of each pair
  std::map<ViewPair, double> pair_penalty;  // lambda (1 - O) part of each pair
  double occlusion_penalty = 0.0;
  double smoothness = 0.0;
  std::size_t pixels = 0;      // per reference view
  std::size_t references = 0;
  std::optional<std::map<std::string, ScalarField>> pixel_maps;

  double photometric() const;
  /// total / (pixels * references)
  double mean_per_pixel() const;
  LossBreakdown& operator+=(const LossBreakdown& other);
  /// key=value lines
  std::string to_report() const;
};

struct PairLossResult {
  double value = 0.0;
  double photometric = 0.0;
  double penalty = 0.0;
  ScalarField pixel_loss;
};

/// sum_x O(x) rho(census distance) + lambda (1 - O(x)). Pixels whose warp
/// leaves the image count as occluded.
PairLossResult pair_loss(const ImageGrid& source, const ImageGrid& target, const Grid& displacement,
                         const Mask& occlusion, const LossConfig& cfg);

struct SmoothnessResult {
  double value = 0.0;
  ScalarField pixel_map;
};

/// lambda_s sum over channels of rho of the horizontal and vertical second
/// differences, each where its 3-tap stencil fits inside the image.
SmoothnessResult smoothness_loss(const SceneFlowField& f, const LossConfig& cfg);
/// Adds d(smoothness)/d(field) into `grad` (4 channels).
void smoothness_gradient(const SceneFlowField& f, const LossConfig& cfg, GradientField& grad);

/// Data term of one reference view: its stereo, temporal and cross pairs.
/// Source census descriptors are computed once and reused.
class ViewObjective {
 public:
  ViewObjective(const StereoQuadruplet& q, ViewId ref, const LossConfig& cfg);

  ViewId reference() const { return ref_; }

  struct Options {
    bool smoothness = true;
    bool pixel_maps = false;
    // When false the masks alone decide which pixels carry a data term;
    // samples that leave the image are clamped to the border instead of
    // counting as occluded. The solver uses this with masks that already
    // fold in frame validity, frozen between refreshes.
    bool validity_gate = true;
  };

  /// Pairs (plus smoothness by default) of `f`. `masks` may be null, meaning
  /// every pixel is visible. When `gradient` is non-null it is overwritten
  /// with d(value)/d(f); this requires soft census.
  double evaluate(const SceneFlowField& f, const MaskSet* masks, LossBreakdown* breakdown,
                  GradientField* gradient) const;
  double evaluate(const SceneFlowField& f, const MaskSet* masks, LossBreakdown* breakdown,
                  GradientField* gradient, const Options& options) const;

 private:
  struct Pair;
  ViewId ref_;
  LossConfig cfg_;
  std::vector<std::shared_ptr<const Pair>> pairs_;  // stereo, temporal, cross
};

/// Three pairs rooted at `ref`, without smoothness.
LossBreakdown pairs_loss(const StereoQuadruplet& q, const FieldSet& fields, ViewId ref,
                         const MaskSet& masks, const LossConfig& cfg);

/// Sum over refs of pairs_loss plus the smoothness of each reference field.
LossBreakdown total_loss(const StereoQuadruplet& q, const FieldSet& fields,
                         const std::set<ViewId>& refs, const MaskSet& masks,
                         const LossConfig& cfg, bool with_pixel_maps = false);

/// Exact gradient of total_loss with respect to every reference field.
/// Masks are constants. Requires soft census.
GradientSet grad_total_loss(const StereoQuadruplet& q, const FieldSet& fields,
                            const std::set<ViewId>& refs, const MaskSet& masks,
                            const LossConfig& cfg);

struct FiniteDiffReport {
  std::size_t coordinates = 0;
  double step = 0.0;
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  double fraction_within = 0.0;  // coordinates with rel error < tolerance
  double rounding_error_estimate = 0.0;
  bool rounding_dominated = false;

  std::string to_report() const;
};

using FieldObjective = std::function<double(const FieldSet&)>;

/// Central differences of `objective` over every coordinate of the fields
/// named in `analytic`, compared elementwise. Relative error is
/// |a - n| / max(|a|, |n|, abs_floor).
FiniteDiffReport finite_diff_check(const FieldObjective& objective, const GradientSet& analytic,
                                   const FieldSet& fields, double h, double tolerance = 1e-4,
                                   double abs_floor = 1e-3);

/// finite_diff_check of total_loss against grad_total_loss.
FiniteDiffReport finite_diff_check(const StereoQuadruplet& q, const FieldSet& fields,
                                   const std::set<ViewId>& refs, const MaskSet& masks,
                                   const LossConfig& cfg, double h, double tolerance = 1e-4);

}  // namespace ssflow
