#include "ssflow/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "census_internal.hpp"
#include "ssflow/error.hpp"
#include "ssflow/simd/kernels.hpp"

namespace ssflow {

namespace {

std::vector<CensusDescriptorGrid> census_per_channel(const ImageGrid& img, const CensusParams& p) {
  std::vector<CensusDescriptorGrid> out;
  for (int c = 0; c < img.channels(); ++c) out.push_back(census_transform(img.channel(c), p));
  return out;
}

struct PairValue {
  double photometric = 0.0;
  double penalty = 0.0;
};

// One ordered pair: warp `target` by `d`, census-compare against the cached
// source descriptors, gate by occlusion and (optionally) warp validity.
PairValue evaluate_pair(const std::vector<CensusDescriptorGrid>& source_census,
                        const ImageGrid& target, const Grid& d, const Mask* occlusion,
                        bool validity_gate, const LossConfig& cfg, Grid* grad_d,
                        ScalarField* pixel_loss) {
  const int h = target.height();
  const int w = target.width();
  const std::size_t n = target.pixel_count();
  const int channels = target.channels();
  const CensusParams& cp = cfg.census;
  const int r = cp.patch / 2;
  require(target.same_dims(d) && d.channels() == 2, "pair loss: displacement shape mismatch");
  require(static_cast<int>(source_census.size()) == channels, "pair loss: channel mismatch");
  if (occlusion != nullptr)
    require(occlusion->height() == h && occlusion->width() == w,
            "pair loss: occlusion mask shape mismatch");
  if (grad_d != nullptr)
    require(cp.mode == CensusMode::Soft, "gradient requires soft census (hard census is not differentiable)");

  std::vector<BilinearStencil> stencils(n);
  std::vector<std::uint8_t> gate(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      stencils[i] = bilinear_stencil(h, w, x + d.at(y, x, 0), y + d.at(y, x, 1));
      const bool visible = occlusion == nullptr || occlusion->at(y, x);
      gate[i] = (stencils[i].in_bounds() || !validity_gate) && visible ? 1 : 0;
    }
  }

  const auto& k = simd::kernels();
  std::vector<double> dist(n, 0.0);
  std::vector<detail::PaddedPlane> pads;
  std::vector<CensusDescriptorGrid> warped_census;
  for (int c = 0; c < channels; ++c) {
    ImageGrid plane(h, w, 1);
    auto pd = plane.data();
    for (std::size_t i = 0; i < n; ++i) pd[i] = interpolate(target, stencils[i], c);
    detail::PaddedPlane pad = detail::pad_clamped(plane, 0, r);
    CensusDescriptorGrid wc = detail::census_from_padded(pad, cp);
    const CensusDescriptorGrid& sc = source_census[c];
    for (int e = 0; e < wc.entries(); ++e) {
      if (cp.mode == CensusMode::Soft)
        k.soft_hamming_acc(sc.plane(e).data(), wc.plane(e).data(), dist.data(), n,
                           cp.soft_hamming_c);
      else
        k.hard_hamming_acc(sc.plane(e).data(), wc.plane(e).data(), dist.data(), n);
    }
    if (grad_d != nullptr) {
      pads.push_back(std::move(pad));
      warped_census.push_back(std::move(wc));
    }
  }

  PairValue value;
  const double lambda = cfg.weights.lambda_occ;
  if (pixel_loss != nullptr) *pixel_loss = ScalarField(h, w);
  std::vector<double> g_dist;
  if (grad_d != nullptr) g_dist.assign(n, 0.0);
  std::size_t occluded = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = gate[i] ? charbonnier(dist[i], cfg.rho) : lambda;
    if (gate[i]) {
      value.photometric += v;
      if (grad_d != nullptr) g_dist[i] = charbonnier_derivative_from_value(dist[i], v, cfg.rho);
    } else {
      ++occluded;
    }
    if (pixel_loss != nullptr) pixel_loss->data()[i] = v;
  }
  value.penalty = lambda * static_cast<double>(occluded);

  if (grad_d == nullptr) return value;

  *grad_d = Grid(h, w, 2);

  const auto offsets = census_offsets(cp.patch);
  const double hc = cp.soft_hamming_c;
  std::vector<double> g_warped(n);
  for (int c = 0; c < channels; ++c) {
    const std::vector<double> deriv = detail::soft_census_derivatives(pads[c], cp.patch, cp.sigma2);
    const CensusDescriptorGrid& sc = source_census[c];
    const CensusDescriptorGrid& wc = warped_census[c];
    std::fill(g_warped.begin(), g_warped.end(), 0.0);
    for (std::size_t e = 0; e < offsets.size(); ++e) {
      const auto [dx, dy] = offsets[e];
      const double* a = sc.plane(static_cast<int>(e)).data();
      const double* b = wc.plane(static_cast<int>(e)).data();
      const double* ds = deriv.data() + e * n;
      for (int y = 0; y < h; ++y) {
        const int ny = std::clamp(y + dy, 0, h - 1);
        for (int x = 0; x < w; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          if (g_dist[i] == 0.0) continue;
          // d q / d e with q = e^2 / (c + e^2), e = source - warped
          const double diff = a[i] - b[i];
          const double den = hc + diff * diff;
          const double dq = 2.0 * hc * diff / (den * den);
          const double g_delta = -g_dist[i] * dq * ds[i];
          const std::size_t ni = static_cast<std::size_t>(ny) * w + std::clamp(x + dx, 0, w - 1);
          g_warped[ni] += g_delta;
          g_warped[i] -= g_delta;
        }
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (g_warped[i] == 0.0) continue;
        double gx = 0.0;
        double gy = 0.0;
        interpolate_gradient(target, stencils[i], c, gx, gy);
        grad_d->at(y, x, 0) += g_warped[i] * gx;
        grad_d->at(y, x, 1) += g_warped[i] * gy;
      }
    }
  }
  return value;
}

}  // namespace

MaskSet all_visible_masks(const std::set<ViewId>& refs, int height, int width) {
  MaskSet out;
  for (ViewId ref : refs)
    for (PairKind k : kAllPairKinds) out[{ref, partner(ref, k)}] = Mask(height, width, true);
  return out;
}

double LossBreakdown::photometric() const {
  double sum = 0.0;
  for (const auto& [pair, v] : per_pair) sum += v;
  return sum;
}

double LossBreakdown::mean_per_pixel() const {
  const std::size_t denom = pixels * std::max<std::size_t>(references, 1);
  return denom == 0 ? 0.0 : total / static_cast<double>(denom);
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& other) {
  total += other.total;
  for (const auto& [pair, v] : other.per_pair) per_pair[pair] += v;
  for (const auto& [pair, v] : other.pair_penalty) pair_penalty[pair] += v;
  occlusion_penalty += other.occlusion_penalty;
  smoothness += other.smoothness;
  if (pixels == 0) pixels = other.pixels;
  references += other.references;
  if (other.pixel_maps) {
    if (!pixel_maps) pixel_maps.emplace();
    for (const auto& [name, map] : *other.pixel_maps) (*pixel_maps)[name] = map;
  }
  return *this;
}

std::string LossBreakdown::to_report() const {
  std::ostringstream os;
  os.precision(17);
  os << "total=" << total << "\n";
  os << "photometric=" << photometric() << "\n";
  os << "occlusion_penalty=" << occlusion_penalty << "\n";
  os << "smoothness=" << smoothness << "\n";
  for (const auto& [pair, v] : per_pair) os << "pair." << pair_name(pair) << "=" << v << "\n";
  for (const auto& [pair, v] : pair_penalty)
    os << "penalty." << pair_name(pair) << "=" << v << "\n";
  os << "pixels=" << pixels << "\n";
  os << "references=" << references << "\n";
  os << "mean_per_pixel=" << mean_per_pixel() << "\n";
  return os.str();
}

PairLossResult pair_loss(const ImageGrid& source, const ImageGrid& target, const Grid& displacement,
                         const Mask& occlusion, const LossConfig& cfg) {
  require(source.same_shape(target), "pair_loss: image shapes differ");
  PairLossResult out;
  const PairValue v = evaluate_pair(census_per_channel(source, cfg.census), target, displacement,
                                    &occlusion, true, cfg, nullptr, &out.pixel_loss);
  out.photometric = v.photometric;
  out.penalty = v.penalty;
  out.value = v.photometric + v.penalty;
  return out;
}

namespace {

// Applies `fn(channel, y, x, y_step, x_step)` to every horizontal and
// vertical 3-tap stencil center.
template <typename Fn>
void for_each_second_difference(const SceneFlowField& f, Fn&& fn) {
  const int h = f.height();
  const int w = f.width();
  for (int c = 0; c < 4; ++c) {
    for (int y = 0; y < h; ++y)
      for (int x = 1; x + 1 < w; ++x) fn(c, y, x, 0, 1);
    for (int y = 1; y + 1 < h; ++y)
      for (int x = 0; x < w; ++x) fn(c, y, x, 1, 0);
  }
}

}  // namespace

SmoothnessResult smoothness_loss(const SceneFlowField& f, const LossConfig& cfg) {
  require(cfg.weights.lambda_smooth >= 0.0, "smoothness_loss: lambda_smooth must be >= 0");
  SmoothnessResult out{0.0, ScalarField(f.height(), f.width())};
  const Grid& s = f.values;
  const double lambda = cfg.weights.lambda_smooth;
  for_each_second_difference(f, [&](int c, int y, int x, int sy, int sx) {
    const double t = s.at(y - sy, x - sx, c) - 2.0 * s.at(y, x, c) + s.at(y + sy, x + sx, c);
    const double v = lambda * charbonnier(t, cfg.rho);
    out.value += v;
    out.pixel_map.at(y, x) += v;
  });
  return out;
}

void smoothness_gradient(const SceneFlowField& f, const LossConfig& cfg, GradientField& grad) {
  require(grad.same_shape(f.values), "smoothness_gradient: gradient shape mismatch");
  const Grid& s = f.values;
  const double lambda = cfg.weights.lambda_smooth;
  for_each_second_difference(f, [&](int c, int y, int x, int sy, int sx) {
    const double t = s.at(y - sy, x - sx, c) - 2.0 * s.at(y, x, c) + s.at(y + sy, x + sx, c);
    const double g = lambda * charbonnier_derivative(t, cfg.rho);
    grad.at(y - sy, x - sx, c) += g;
    grad.at(y, x, c) -= 2.0 * g;
    grad.at(y + sy, x + sx, c) += g;
  });
}

namespace {

// smoothness_loss and smoothness_gradient in one pass, one pow per term.
double smoothness_with_gradient(const SceneFlowField& f, const LossConfig& cfg, GradientField& grad) {
  const Grid& s = f.values;
  const double lambda = cfg.weights.lambda_smooth;
  double value = 0.0;
  for_each_second_difference(f, [&](int c, int y, int x, int sy, int sx) {
    const double t = s.at(y - sy, x - sx, c) - 2.0 * s.at(y, x, c) + s.at(y + sy, x + sx, c);
    const double r = charbonnier(t, cfg.rho);
    value += lambda * r;
    const double g = lambda * charbonnier_derivative_from_value(t, r, cfg.rho);
    grad.at(y - sy, x - sx, c) += g;
    grad.at(y, x, c) -= 2.0 * g;
    grad.at(y + sy, x + sx, c) += g;
  });
  return value;
}

}  // namespace

struct ViewObjective::Pair {
  PairKind kind;
  ViewId target;
  ImageGrid target_image;
  std::vector<CensusDescriptorGrid> source_census;
};

ViewObjective::ViewObjective(const StereoQuadruplet& q, ViewId ref, const LossConfig& cfg)
    : ref_(ref), cfg_(cfg) {
  require(cfg.weights.lambda_occ >= 0.0 && cfg.weights.lambda_smooth >= 0.0,
          "loss weights must be >= 0");
  auto source_census = census_per_channel(q.at(ref), cfg.census);
  for (PairKind k : kAllPairKinds) {
    const ViewId target = partner(ref, k);
    pairs_.push_back(std::make_shared<const Pair>(Pair{k, target, q.at(target), source_census}));
  }
}

double ViewObjective::evaluate(const SceneFlowField& f, const MaskSet* masks,
                               LossBreakdown* breakdown, GradientField* gradient) const {
  return evaluate(f, masks, breakdown, gradient, Options{});
}

double ViewObjective::evaluate(const SceneFlowField& f, const MaskSet* masks,
                               LossBreakdown* breakdown, GradientField* gradient,
                               const Options& options) const {
  require(f.reference == ref_, "ViewObjective: field reference " + view_name(f.reference) +
                                   " does not match " + view_name(ref_));
  const int h = f.height();
  const int w = f.width();
  require(h == pairs_.front()->target_image.height() && w == pairs_.front()->target_image.width(),
          "ViewObjective: field and image dimensions differ");
  const PairDisplacements disp = displacements_from_sceneflow(f);
  const double sign = stereo_sign(ref_.side);

  LossBreakdown local;
  local.pixels = static_cast<std::size_t>(h) * w;
  local.references = 1;
  if (options.pixel_maps) local.pixel_maps.emplace();
  if (gradient != nullptr) *gradient = GradientField(h, w, 4);

  Grid grad_d;
  for (const auto& pair : pairs_) {
    const ViewPair key{ref_, pair->target};
    const Mask* mask = nullptr;
    if (masks != nullptr) {
      const auto it = masks->find(key);
      require(it != masks->end(), "missing occlusion mask for pair " + pair_name(key));
      mask = &it->second;
    }
    ScalarField pixel_loss;
    const PairValue v =
        evaluate_pair(pair->source_census, pair->target_image, disp.get(pair->kind).values, mask,
                      options.validity_gate, cfg_, gradient != nullptr ? &grad_d : nullptr,
                      options.pixel_maps ? &pixel_loss : nullptr);
    local.per_pair[key] = v.photometric;
    local.pair_penalty[key] = v.penalty;
    local.occlusion_penalty += v.penalty;
    if (options.pixel_maps) (*local.pixel_maps)["pair." + pair_name(key)] = std::move(pixel_loss);

    if (gradient != nullptr) {
      // chain rule through the displacement parameterization
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double gx = grad_d.at(y, x, 0);
          const double gy = grad_d.at(y, x, 1);
          switch (pair->kind) {
            case PairKind::Stereo:
              gradient->at(y, x, SceneFlowField::DispRef) += sign * gx;
              break;
            case PairKind::Temporal:
              gradient->at(y, x, SceneFlowField::U) += gx;
              gradient->at(y, x, SceneFlowField::V) += gy;
              break;
            case PairKind::Cross:
              gradient->at(y, x, SceneFlowField::U) += gx;
              gradient->at(y, x, SceneFlowField::V) += gy;
              gradient->at(y, x, SceneFlowField::DispOther) += sign * gx;
              break;
          }
        }
      }
    }
  }

  if (options.smoothness) {
    if (gradient != nullptr && !options.pixel_maps) {
      local.smoothness = smoothness_with_gradient(f, cfg_, *gradient);
    } else {
      SmoothnessResult s = smoothness_loss(f, cfg_);
      local.smoothness = s.value;
      if (options.pixel_maps) (*local.pixel_maps)["smoothness." + view_name(ref_)] = std::move(s.pixel_map);
      if (gradient != nullptr) smoothness_gradient(f, cfg_, *gradient);
    }
  }
  local.total = local.photometric() + local.occlusion_penalty + local.smoothness;
  const double total = local.total;
  if (breakdown != nullptr) *breakdown = std::move(local);
  return total;
}

LossBreakdown pairs_loss(const StereoQuadruplet& q, const FieldSet& fields, ViewId ref,
                         const MaskSet& masks, const LossConfig& cfg) {
  const auto it = fields.find(ref);
  require(it != fields.end(), "pairs_loss: no field for reference " + view_name(ref));
  LossBreakdown out;
  ViewObjective(q, ref, cfg).evaluate(it->second, &masks, &out, nullptr,
                                      ViewObjective::Options{false, false});
  return out;
}

LossBreakdown total_loss(const StereoQuadruplet& q, const FieldSet& fields,
                         const std::set<ViewId>& refs, const MaskSet& masks,
                         const LossConfig& cfg, bool with_pixel_maps) {
  require(!refs.empty(), "total_loss: no reference views");
  LossBreakdown out;
  for (ViewId ref : refs) {
    const auto it = fields.find(ref);
    require(it != fields.end(), "total_loss: no field for reference " + view_name(ref));
    LossBreakdown part;
    ViewObjective(q, ref, cfg).evaluate(it->second, &masks, &part, nullptr,
                                        ViewObjective::Options{true, with_pixel_maps});
    out += part;
  }
  // re-sum in the canonical order so the decomposition holds for any ref set
  out.total = out.photometric() + out.occlusion_penalty + out.smoothness;
  return out;
}

GradientSet grad_total_loss(const StereoQuadruplet& q, const FieldSet& fields,
                            const std::set<ViewId>& refs, const MaskSet& masks,
                            const LossConfig& cfg) {
  require(cfg.census.mode == CensusMode::Soft,
          "grad_total_loss: hard census is not differentiable");
  GradientSet out;
  for (ViewId ref : refs) {
    const auto it = fields.find(ref);
    require(it != fields.end(), "grad_total_loss: no field for reference " + view_name(ref));
    GradientField g;
    ViewObjective(q, ref, cfg).evaluate(it->second, &masks, nullptr, &g);
    out[ref] = std::move(g);
  }
  return out;
}

std::string FiniteDiffReport::to_report() const {
  std::ostringstream os;
  os.precision(6);
  os << "coordinates=" << coordinates << "\n";
  os << "step=" << step << "\n";
  os << "tolerance=" << tolerance << "\n";
  os << "max_rel_error=" << max_rel_error << "\n";
  os << "mean_rel_error=" << mean_rel_error << "\n";
  os << "fraction_within=" << fraction_within << "\n";
  os << "rounding_error_estimate=" << rounding_error_estimate << "\n";
  os << "rounding_dominated=" << (rounding_dominated ? "true" : "false") << "\n";
  return os.str();
}

FiniteDiffReport finite_diff_check(const FieldObjective& objective, const GradientSet& analytic,
                                   const FieldSet& fields, double h, double tolerance,
                                   double abs_floor) {
  require(h > 0.0, "finite_diff_check: step must be > 0");
  FiniteDiffReport report;
  report.step = h;
  report.tolerance = tolerance;
  FieldSet work = fields;
  const double base = objective(work);
  double sum_rel = 0.0;
  double sum_abs_grad = 0.0;
  std::size_t within = 0;
  for (const auto& [view, grad] : analytic) {
    auto it = work.find(view);
    require(it != work.end(), "finite_diff_check: gradient for a view without field");
    auto values = it->second.values.data();
    const auto g = grad.data();
    require(g.size() == values.size(), "finite_diff_check: gradient shape mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + h;
      const double plus = objective(work);
      values[i] = original - h;
      const double minus = objective(work);
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * h);
      const double denom = std::max({std::abs(g[i]), std::abs(numeric), abs_floor});
      const double rel = std::abs(g[i] - numeric) / denom;
      report.max_rel_error = std::max(report.max_rel_error, rel);
      sum_rel += rel;
      sum_abs_grad += std::abs(g[i]);
      if (rel < tolerance) ++within;
      ++report.coordinates;
    }
  }
  if (report.coordinates > 0) {
    const double count = static_cast<double>(report.coordinates);
    report.mean_rel_error = sum_rel / count;
    report.fraction_within = static_cast<double>(within) / count;
    report.rounding_error_estimate =
        std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(base)) / h;
    report.rounding_dominated =
        report.rounding_error_estimate > tolerance * std::max(sum_abs_grad / count, abs_floor);
  }
  return report;
}

FiniteDiffReport finite_diff_check(const StereoQuadruplet& q, const FieldSet& fields,
                                   const std::set<ViewId>& refs, const MaskSet& masks,
                                   const LossConfig& cfg, double h, double tolerance) {
  const GradientSet analytic = grad_total_loss(q, fields, refs, masks, cfg);
  std::vector<ViewObjective> objectives;
  for (ViewId ref : refs) objectives.emplace_back(q, ref, cfg);
  const FieldObjective objective = [&](const FieldSet& fs) {
    double sum = 0.0;
    for (const auto& obj : objectives) sum += obj.evaluate(fs.at(obj.reference()), &masks, nullptr, nullptr);
    return sum;
  };
  return finite_diff_check(objective, analytic, fields, h, tolerance);
}

}  // namespace ssflow
