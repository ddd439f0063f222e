#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "ssflow/geometry.hpp"
#include "ssflow/loss.hpp"
#include "ssflow/occlusion.hpp"

namespace ssflow {

enum class InitMode { Zero, CostVolumeArgmax };

std::string init_mode_name(InitMode m);
InitMode parse_init_mode(const std::string& s);

struct SolverConfig {
  int levels = 4;
  int iters_per_level = 200;
  double step = 1.0;  // initial step size
  int mask_refresh_every = 10;
  // A level ends early once the masks stop changing and a whole mask epoch
  // lowers the data + smoothness energy by less than this fraction.
  double tolerance = 1e-3;
  std::set<ViewId> refs{kLeftT};
  LossConfig loss;
  ConsistencyParams consistency;
  InitMode init = InitMode::Zero;
  int costvol_radius = 4;  // search radius at the coarsest level
  bool grayscale = true;

  /// Throws InvalidInput on out-of-range values.
  void validate() const;
};

struct IterationRecord {
  int level = 0;  // 0 = finest
  int iter = 0;
  double total = 0.0;
  double data = 0.0;
  double smooth = 0.0;
  double penalty = 0.0;
  double step = 0.0;  // mean accepted step over the reference fields
  bool mask_refresh = false;

  /// "level=.. iter=.. total=.. data=.. smooth=.. penalty=.. step=.."
  std::string to_line() const;
};

struct SolveResult {
  FieldSet fields;  // all four views; only `refs` enter the total
  std::set<ViewId> refs;
  MaskSet masks;    // final per-pair masks of the reference views
  std::vector<IterationRecord> history;
  LossBreakdown final_loss;
  bool converged = true;
};

using ProgressCallback = std::function<void(const IterationRecord&)>;

/// Coarse-to-fine minimization of the multi-reference total loss.
///
/// All four fields are kept so that every pair has an inverse displacement
/// for the consistency check. Reference fields descend on their masked
/// loss; the others descend on the unmasked loss and only feed the masks.
/// Masks are constants between refreshes, which makes the per-field
/// energies independent, so each field runs its own backtracking line
/// search. Throws NumericalError on a non-finite loss or gradient.
SolveResult solve(const StereoQuadruplet& q, const SolverConfig& cfg,
                  const ProgressCallback& progress = {});

/// Bilinear x2 upsampling of a field to (height, width) with all four
/// channels scaled by 2.
SceneFlowField upsample_field(const SceneFlowField& coarse, int height, int width);

}  // namespace ssflow
