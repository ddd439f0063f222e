#pragma once

#include <array>
#include <compare>
#include <map>
#include <string>
#include <utility>

#include "ssflow/grid.hpp"

namespace ssflow {

enum class Side { Left, Right };
enum class Time { T, TPlus1 };

struct ViewId {
  Side side = Side::Left;
  Time time = Time::T;

  friend auto operator<=>(const ViewId&, const ViewId&) = default;
};

inline constexpr ViewId kLeftT{Side::Left, Time::T};
inline constexpr ViewId kRightT{Side::Right, Time::T};
inline constexpr ViewId kLeftT1{Side::Left, Time::TPlus1};
inline constexpr ViewId kRightT1{Side::Right, Time::TPlus1};
inline constexpr std::array<ViewId, 4> kAllViews{kLeftT, kRightT, kLeftT1, kRightT1};

/// Index 0..3 in kAllViews order.
int view_index(ViewId v);
/// "Lt", "Rt", "Lt1", "Rt1".
std::string view_name(ViewId v);
ViewId parse_view(const std::string& name);

/// The three images a reference view is paired with.
enum class PairKind { Stereo, Temporal, Cross };
inline constexpr std::array<PairKind, 3> kAllPairKinds{PairKind::Stereo, PairKind::Temporal,
                                                       PairKind::Cross};
ViewId partner(ViewId ref, PairKind kind);
std::string pair_kind_name(PairKind kind);

using ViewPair = std::pair<ViewId, ViewId>;  // (source, target)
std::string pair_name(const ViewPair& p);     // e.g. "Lt->Rt1"

/// Per-pixel (u, v, disp_ref, disp_other) expressed in the pixel grid of
/// `reference`, in original (un-mirrored) image coordinates.
///
/// (u, v) is the optical flow toward the same camera at the other time step,
/// disp_ref the non-negative disparity at the reference time and disp_other
/// the disparity at the other time, registered to the reference grid. For a
/// left reference at time t these are exactly (u, v, disp_t, disp_t+1).
struct SceneFlowField {
  enum Channel { U = 0, V = 1, DispRef = 2, DispOther = 3 };

  ViewId reference = kLeftT;
  Grid values;  // 4 channels

  SceneFlowField() = default;
  SceneFlowField(ViewId ref, int height, int width);
  SceneFlowField(ViewId ref, Grid v);

  int height() const { return values.height(); }
  int width() const { return values.width(); }

  /// Disparity channels negative anywhere (diagnostic only).
  bool has_negative_disparity() const;
};

struct DisplacementField {
  ViewId source = kLeftT;
  ViewId target = kRightT;
  Grid values;  // 2 channels (dx, dy)
};

struct PairDisplacements {
  DisplacementField stereo;
  DisplacementField temporal;
  DisplacementField cross;

  const DisplacementField& get(PairKind kind) const;
};

/// Images indexed by view, identical dimensions and channel count.
class StereoQuadruplet {
 public:
  StereoQuadruplet() = default;
  StereoQuadruplet(ImageGrid lt, ImageGrid rt, ImageGrid lt1, ImageGrid rt1);

  const ImageGrid& at(ViewId v) const { return images_[view_index(v)]; }
  int height() const { return images_[0].height(); }
  int width() const { return images_[0].width(); }
  int channels() const { return images_[0].channels(); }

  StereoQuadruplet grayscale() const;

 private:
  std::array<ImageGrid, 4> images_;
};

using FieldSet = std::map<ViewId, SceneFlowField>;

/// Displacement gain on the disparity channels: a left view reaches its
/// stereo partner at x - disp, a right view at x + disp.
inline double stereo_sign(Side side) { return side == Side::Left ? -1.0 : 1.0; }

/// The stereo, temporal and cross displacements of one field.
///
/// Left references use the closed form directly. Right references are
/// mirrored into a left-reference problem, evaluated there, and the three
/// displacements are unflipped back.
PairDisplacements displacements_from_sceneflow(const SceneFlowField& f);

/// Displacement of `f` toward one partner view.
DisplacementField displacement_toward(const SceneFlowField& f, ViewId target);

struct AssembledInputs {
  StereoQuadruplet images;
  bool flipped = false;
  bool time_reversed = false;
  ViewId reference = kLeftT;
};

/// Reorders (and for right references mirrors) the quadruplet so that
/// `ref` sits in the left-reference slot of a valid rectified problem.
AssembledInputs assemble_reference_inputs(const StereoQuadruplet& q, ViewId ref);

/// Original view occupying slot `slot` of a quadruplet assembled for `ref`.
ViewId original_view(ViewId slot, ViewId ref);

/// d(x,y) = (-d'_x(W-1-x, y), d'_y(W-1-x, y)); sides of source and target swap.
DisplacementField unflip_displacement(const DisplacementField& mirrored, int width);

/// Scene-flow field solved in mirrored coordinates, mapped back:
/// u -> -u, v and both disparities copied, all read at the mirrored column.
SceneFlowField unflip_field(const SceneFlowField& mirrored);

/// Map every field of a problem assembled for `ref` back to original views
/// and coordinates.
FieldSet fields_to_original(const FieldSet& assembled_fields, ViewId ref);

/// Forward displacement for every ordered pair of distinct views, each read
/// from the source view's own field. The inverse of (a,b) is entry (b,a).
std::map<ViewPair, DisplacementField> inverse_displacement(const FieldSet& fields);

}  // namespace ssflow
