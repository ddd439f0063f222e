#include "ssflow/geometry.hpp"

#include "ssflow/error.hpp"
#include "ssflow/image_io.hpp"

namespace ssflow {

namespace {

Side other(Side s) { return s == Side::Left ? Side::Right : Side::Left; }
Time other(Time t) { return t == Time::T ? Time::TPlus1 : Time::T; }

// Closed form for a left reference in its own (unmirrored) frame.
PairDisplacements left_reference_displacements(const SceneFlowField& f) {
  const int h = f.height();
  const int w = f.width();
  PairDisplacements out;
  out.stereo = {f.reference, partner(f.reference, PairKind::Stereo), Grid(h, w, 2)};
  out.temporal = {f.reference, partner(f.reference, PairKind::Temporal), Grid(h, w, 2)};
  out.cross = {f.reference, partner(f.reference, PairKind::Cross), Grid(h, w, 2)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = f.values.at(y, x, SceneFlowField::U);
      const double v = f.values.at(y, x, SceneFlowField::V);
      out.stereo.values.at(y, x, 0) = -f.values.at(y, x, SceneFlowField::DispRef);
      out.stereo.values.at(y, x, 1) = 0.0;
      out.temporal.values.at(y, x, 0) = u;
      out.temporal.values.at(y, x, 1) = v;
      out.cross.values.at(y, x, 0) = u - f.values.at(y, x, SceneFlowField::DispOther);
      out.cross.values.at(y, x, 1) = v;
    }
  }
  return out;
}

}  // namespace

int view_index(ViewId v) {
  return (v.time == Time::TPlus1 ? 2 : 0) + (v.side == Side::Right ? 1 : 0);
}

std::string view_name(ViewId v) {
  std::string name = v.side == Side::Left ? "L" : "R";
  name += v.time == Time::T ? "t" : "t1";
  return name;
}

ViewId parse_view(const std::string& name) {
  for (ViewId v : kAllViews)
    if (view_name(v) == name) return v;
  throw InvalidInput("unknown view '" + name + "' (expected Lt, Rt, Lt1 or Rt1)");
}

ViewId partner(ViewId ref, PairKind kind) {
  switch (kind) {
    case PairKind::Stereo:
      return {other(ref.side), ref.time};
    case PairKind::Temporal:
      return {ref.side, other(ref.time)};
    case PairKind::Cross:
      return {other(ref.side), other(ref.time)};
  }
  return ref;
}

std::string pair_kind_name(PairKind kind) {
  switch (kind) {
    case PairKind::Stereo:
      return "stereo";
    case PairKind::Temporal:
      return "temporal";
    case PairKind::Cross:
      return "cross";
  }
  return "?";
}

std::string pair_name(const ViewPair& p) {
  return view_name(p.first) + "->" + view_name(p.second);
}

SceneFlowField::SceneFlowField(ViewId ref, int height, int width)
    : reference(ref), values(height, width, 4) {}

SceneFlowField::SceneFlowField(ViewId ref, Grid v) : reference(ref), values(std::move(v)) {
  require(values.channels() == 4, "SceneFlowField: expected 4 channels");
}

bool SceneFlowField::has_negative_disparity() const {
  for (int y = 0; y < height(); ++y)
    for (int x = 0; x < width(); ++x)
      if (values.at(y, x, DispRef) < 0.0 || values.at(y, x, DispOther) < 0.0) return true;
  return false;
}

const DisplacementField& PairDisplacements::get(PairKind kind) const {
  switch (kind) {
    case PairKind::Stereo:
      return stereo;
    case PairKind::Temporal:
      return temporal;
    case PairKind::Cross:
      return cross;
  }
  return stereo;
}

StereoQuadruplet::StereoQuadruplet(ImageGrid lt, ImageGrid rt, ImageGrid lt1, ImageGrid rt1)
    : images_{std::move(lt), std::move(rt), std::move(lt1), std::move(rt1)} {
  for (const auto& img : images_) {
    require(!img.empty(), "StereoQuadruplet: empty image");
    require(img.same_shape(images_[0]), "StereoQuadruplet: images differ in shape");
  }
}

StereoQuadruplet StereoQuadruplet::grayscale() const {
  return {to_grayscale(images_[0]), to_grayscale(images_[1]), to_grayscale(images_[2]),
          to_grayscale(images_[3])};
}

PairDisplacements displacements_from_sceneflow(const SceneFlowField& f) {
  require(f.values.channels() == 4, "displacements_from_sceneflow: expected 4 channels");
  if (f.reference.side == Side::Left) return left_reference_displacements(f);
  const int w = f.width();
  const PairDisplacements mirrored = left_reference_displacements(unflip_field(f));
  return {unflip_displacement(mirrored.stereo, w), unflip_displacement(mirrored.temporal, w),
          unflip_displacement(mirrored.cross, w)};
}

DisplacementField displacement_toward(const SceneFlowField& f, ViewId target) {
  const PairDisplacements all = displacements_from_sceneflow(f);
  for (PairKind k : kAllPairKinds)
    if (partner(f.reference, k) == target) return all.get(k);
  throw InvalidInput("displacement_toward: target equals the reference view");
}

ViewId original_view(ViewId slot, ViewId ref) {
  const Side side = ref.side == Side::Right ? other(slot.side) : slot.side;
  const Time time = ref.time == Time::TPlus1 ? other(slot.time) : slot.time;
  return {side, time};
}

AssembledInputs assemble_reference_inputs(const StereoQuadruplet& q, ViewId ref) {
  AssembledInputs out;
  out.flipped = ref.side == Side::Right;
  out.time_reversed = ref.time == Time::TPlus1;
  out.reference = ref;
  std::array<ImageGrid, 4> slots;
  for (ViewId slot : kAllViews) {
    const ImageGrid& src = q.at(original_view(slot, ref));
    slots[view_index(slot)] = out.flipped ? hflip(src) : src;
  }
  out.images = StereoQuadruplet(std::move(slots[0]), std::move(slots[1]), std::move(slots[2]),
                                std::move(slots[3]));
  return out;
}

DisplacementField unflip_displacement(const DisplacementField& mirrored, int width) {
  require(mirrored.values.width() == width, "unflip_displacement: width mismatch");
  require(mirrored.values.channels() == 2, "unflip_displacement: expected 2 channels");
  DisplacementField out{{other(mirrored.source.side), mirrored.source.time},
                        {other(mirrored.target.side), mirrored.target.time},
                        Grid(mirrored.values.height(), width, 2)};
  for (int y = 0; y < mirrored.values.height(); ++y) {
    for (int x = 0; x < width; ++x) {
      out.values.at(y, x, 0) = -mirrored.values.at(y, width - 1 - x, 0);
      out.values.at(y, x, 1) = mirrored.values.at(y, width - 1 - x, 1);
    }
  }
  return out;
}

SceneFlowField unflip_field(const SceneFlowField& mirrored) {
  const int w = mirrored.width();
  SceneFlowField out({other(mirrored.reference.side), mirrored.reference.time}, mirrored.height(),
                     w);
  for (int y = 0; y < mirrored.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      const int mx = w - 1 - x;
      out.values.at(y, x, SceneFlowField::U) = -mirrored.values.at(y, mx, SceneFlowField::U);
      for (int c = SceneFlowField::V; c <= SceneFlowField::DispOther; ++c)
        out.values.at(y, x, c) = mirrored.values.at(y, mx, c);
    }
  }
  return out;
}

FieldSet fields_to_original(const FieldSet& assembled_fields, ViewId ref) {
  FieldSet out;
  for (const auto& [slot, field] : assembled_fields) {
    SceneFlowField f = ref.side == Side::Right ? unflip_field(field) : field;
    f.reference = original_view(slot, ref);
    out[f.reference] = std::move(f);
  }
  return out;
}

std::map<ViewPair, DisplacementField> inverse_displacement(const FieldSet& fields) {
  for (ViewId v : kAllViews)
    require(fields.count(v) == 1, "inverse_displacement: missing field for " + view_name(v));
  std::map<ViewPair, DisplacementField> out;
  for (ViewId v : kAllViews) {
    const SceneFlowField& f = fields.at(v);
    require(f.reference == v, "inverse_displacement: field stored under the wrong view");
    const PairDisplacements d = displacements_from_sceneflow(f);
    for (PairKind k : kAllPairKinds) out[{v, partner(v, k)}] = d.get(k);
  }
  return out;
}

}  // namespace ssflow
