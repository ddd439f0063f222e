#include "ssflow/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "ssflow/costvol.hpp"
#include "ssflow/error.hpp"
#include "ssflow/image_io.hpp"

namespace ssflow {

std::string init_mode_name(InitMode m) {
  return m == InitMode::Zero ? "zero" : "costvol";
}

InitMode parse_init_mode(const std::string& s) {
  if (s == "zero") return InitMode::Zero;
  if (s == "costvol") return InitMode::CostVolumeArgmax;
  throw InvalidInput("unknown init mode '" + s + "' (expected zero or costvol)");
}

void SolverConfig::validate() const {
  require(levels >= 1, "solver: levels must be >= 1");
  require(iters_per_level >= 1, "solver: iters_per_level must be >= 1");
  require(std::isfinite(step) && step > 0.0, "solver: step must be > 0");
  require(mask_refresh_every >= 1, "solver: mask_refresh_every must be >= 1");
  require(tolerance >= 0.0, "solver: tolerance must be >= 0");
  require(!refs.empty(), "solver: refs must not be empty");
  require(costvol_radius >= 0, "solver: costvol_radius must be >= 0");
  require(loss.census.mode == CensusMode::Soft, "solver: optimization requires soft census");
}

std::string IterationRecord::to_line() const {
  std::ostringstream os;
  os.precision(10);
  os << "level=" << level << " iter=" << iter << " total=" << total << " data=" << data
     << " smooth=" << smooth << " penalty=" << penalty << " step=" << step;
  if (mask_refresh) os << " masks=refreshed";
  return os.str();
}

SceneFlowField upsample_field(const SceneFlowField& coarse, int height, int width) {
  require(height > 0 && width > 0, "upsample_field: empty target");
  SceneFlowField out(coarse.reference, height, width);
  const int ch = coarse.height();
  const int cw = coarse.width();
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const BilinearStencil s = bilinear_stencil(ch, cw, (x + 0.5) / 2.0 - 0.5, (y + 0.5) / 2.0 - 0.5);
      for (int c = 0; c < 4; ++c) out.values.at(y, x, c) = 2.0 * interpolate(coarse.values, s, c);
    }
  }
  return out;
}

namespace {

constexpr int kFinestHat = 2;
// Masks count as settled when fewer pixels than this fraction flip.
constexpr double kSettledMaskFraction = 1e-3;
constexpr int kInitMedianRadius = 2;  // 5x5 window

struct FieldState {
  SceneFlowField field;
  GradientField grad;
  LossBreakdown breakdown;
  double energy = 0.0;
  std::vector<double> steps;  // one per hat spacing
  std::vector<bool> stalled;  // line search failed for that spacing this epoch
};

void check_finite(double e, const GradientField& g, ViewId v, int level, int iter) {
  if (std::isfinite(e) && g.all_finite()) return;
  std::ostringstream os;
  os << "non-finite " << (std::isfinite(e) ? "gradient" : "loss") << " for field "
     << view_name(v) << " at level " << level << ", iteration " << iter;
  throw NumericalError(os.str());
}

// Pairs of a non-reference view carry no occlusion reasoning; only frame
// validity gates them.
void add_frame_masks(const SceneFlowField& f, MaskSet& masks) {
  const PairDisplacements d = displacements_from_sceneflow(f);
  const int h = f.height();
  const int w = f.width();
  for (PairKind k : kAllPairKinds) {
    const Grid& g = d.get(k).values;
    Mask m(h, w, false);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        m.set(y, x, bilinear_stencil(h, w, x + g.at(y, x, 0), y + g.at(y, x, 1)).in_bounds());
    masks[{f.reference, partner(f.reference, k)}] = std::move(m);
  }
}

// Piecewise-bilinear functions on a lattice of nodes `spacing` pixels
// apart. Fields in this space have second differences only on node lines.
struct HatBasis {
  int spacing, nodes_x, nodes_y;
  HatBasis(int h, int w, int s)
      : spacing(s), nodes_x((w - 1 + s - 1) / s + 1), nodes_y((h - 1 + s - 1) / s + 1) {}

  // node index and weight of the upper node for one pixel coordinate
  std::pair<int, double> locate(int p) const { return {p / spacing, static_cast<double>(p % spacing) / spacing}; }
};

// p += P^T-then-P projection of g onto one hat space, normalized by the
// node footprint so every scale contributes an average.
void add_hat_projection(const Grid& g, int spacing, Grid& out) {
  const int h = g.height();
  const int w = g.width();
  const HatBasis b(h, w, spacing);
  const std::size_t nodes = static_cast<std::size_t>(b.nodes_x) * b.nodes_y;
  std::vector<double> coarse(nodes * 4, 0.0);
  std::vector<double> mass(nodes, 0.0);
  auto node = [&](int ny, int nx) { return static_cast<std::size_t>(std::min(ny, b.nodes_y - 1)) * b.nodes_x + std::min(nx, b.nodes_x - 1); };
  for (int y = 0; y < h; ++y) {
    const auto [jy, ay] = b.locate(y);
    for (int x = 0; x < w; ++x) {
      const auto [jx, ax] = b.locate(x);
      const std::size_t n[4] = {node(jy, jx), node(jy, jx + 1), node(jy + 1, jx), node(jy + 1, jx + 1)};
      const double wt[4] = {(1 - ay) * (1 - ax), (1 - ay) * ax, ay * (1 - ax), ay * ax};
      for (int k = 0; k < 4; ++k) {
        mass[n[k]] += wt[k];
        for (int c = 0; c < 4; ++c) coarse[n[k] * 4 + c] += wt[k] * g.at(y, x, c);
      }
    }
  }
  for (std::size_t i = 0; i < nodes; ++i)
    if (mass[i] > 0.0)
      for (int c = 0; c < 4; ++c) coarse[i * 4 + c] /= mass[i];
  for (int y = 0; y < h; ++y) {
    const auto [jy, ay] = b.locate(y);
    for (int x = 0; x < w; ++x) {
      const auto [jx, ax] = b.locate(x);
      const std::size_t n[4] = {node(jy, jx), node(jy, jx + 1), node(jy + 1, jx), node(jy + 1, jx + 1)};
      const double wt[4] = {(1 - ay) * (1 - ax), (1 - ay) * ax, ay * (1 - ax), ay * ax};
      for (int c = 0; c < 4; ++c) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += wt[k] * coarse[n[k] * 4 + c];
        out.at(y, x, c) += v;
      }
    }
  }
}

// Node spacings from whole-image bilinear down to kFinestHat.
std::vector<int> hat_spacings(int h, int w) {
  std::vector<int> out{std::max(std::max(h, w) - 1, 1)};
  while (out.back() / 2 >= kFinestHat) out.push_back(out.back() / 2);
  return out;
}

// Gradient projected onto one hat space, scaled so the largest per-pixel
// move is 1 px at t = 1. Plain gradient steps roughen a flat field, which
// the near-L1 smoothness term punishes more than any data gain; the
// solver cycles through hat spaces from coarse to fine instead.
Grid descent_direction(const GradientField& g, int spacing) {
  Grid out(g.height(), g.width(), 4);
  add_hat_projection(g, spacing, out);
  double max_norm = 0.0;
  const auto d = out.data();
  for (std::size_t p = 0; p < d.size(); p += 4)
    max_norm = std::max(max_norm, std::sqrt(d[p] * d[p] + d[p + 1] * d[p + 1] + d[p + 2] * d[p + 2] + d[p + 3] * d[p + 3]));
  if (max_norm > 0.0)
    for (double& v : d) v /= max_norm;
  return out;
}

// Fraction of mask pixels that differ between two mask sets.
double masks_changed(const MaskSet& a, const MaskSet& b) {
  std::size_t changed = 0;
  std::size_t total = 0;
  for (const auto& [pair, m] : b) {
    total += m.pixel_count();
    const auto it = a.find(pair);
    changed += it == a.end() ? m.pixel_count() : (m & ~it->second).count() + (~m & it->second).count();
  }
  return total == 0 ? 0.0 : static_cast<double>(changed) / static_cast<double>(total);
}

bool is_zero(const GradientField& g) {
  for (double v : g.data())
    if (v != 0.0) return false;
  return true;
}

// Per-channel median over a (2r+1)^2 window clamped to the frame. Argmax
// maps of smooth coarse images scatter; the median keeps the dominant shift.
Grid median_filter(const Grid& g, int r) {
  Grid out(g.height(), g.width(), g.channels());
  std::vector<double> window;
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      for (int c = 0; c < g.channels(); ++c) {
        window.clear();
        for (int yy = std::max(0, y - r); yy <= std::min(g.height() - 1, y + r); ++yy)
          for (int xx = std::max(0, x - r); xx <= std::min(g.width() - 1, x + r); ++xx)
            window.push_back(g.at(yy, xx, c));
        const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
        std::nth_element(window.begin(), mid, window.end());
        out.at(y, x, c) = *mid;
      }
    }
  }
  return out;
}

// Cost-volume argmax on the finest images (coarse levels are too smooth for
// per-pixel matching), median filtered, then block-averaged down to the
// coarsest grid (h, w) and divided by `scale`.
FieldSet initial_fields(const StereoQuadruplet& fine, int h, int w, int scale, const SolverConfig& cfg) {
  FieldSet out;
  for (ViewId v : kAllViews) out[v] = SceneFlowField(v, h, w);
  if (cfg.init == InitMode::Zero) return out;

  auto features = [](const ImageGrid& img) {
    return unit_normalize_pixels(normalize_features(extract_features(to_grayscale(img))));
  };
  auto argmax = [&](const FeatureGrid& a, ViewId target) {
    const CostVolume vol = correlation_volume(a, features(fine.at(target)), cfg.costvol_radius * scale);
    return median_filter(cost_argmax(vol).displacement, kInitMedianRadius);
  };
  const int fh = fine.height();
  const int fw = fine.width();
  for (ViewId v : kAllViews) {
    const FeatureGrid fv = features(fine.at(v));
    const Grid stereo = argmax(fv, partner(v, PairKind::Stereo));
    const Grid temporal = argmax(fv, partner(v, PairKind::Temporal));
    const double sign = stereo_sign(v.side);
    Grid& f = out[v].values;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double u = 0.0, vv = 0.0, d = 0.0;
        int n = 0;
        for (int yy = y * scale; yy < std::min(fh, (y + 1) * scale); ++yy)
          for (int xx = x * scale; xx < std::min(fw, (x + 1) * scale); ++xx, ++n) {
            u += temporal.at(yy, xx, 0);
            vv += temporal.at(yy, xx, 1);
            d += sign * stereo.at(yy, xx, 0);
          }
        if (n == 0) continue;
        const double k = 1.0 / (n * scale);
        f.at(y, x, SceneFlowField::U) = u * k;
        f.at(y, x, SceneFlowField::V) = vv * k;
        f.at(y, x, SceneFlowField::DispRef) = d * k;
        f.at(y, x, SceneFlowField::DispOther) = d * k;
      }
    }
  }
  return out;
}

}  // namespace

SolveResult solve(const StereoQuadruplet& q, const SolverConfig& cfg,
                  const ProgressCallback& progress) {
  cfg.validate();
  const StereoQuadruplet base = cfg.grayscale ? q.grayscale() : q;

  std::array<Pyramid, 4> pyramids;
  for (ViewId v : kAllViews) pyramids[view_index(v)] = build_pyramid(base.at(v), cfg.levels);

  SolveResult result;
  result.refs = cfg.refs;
  FieldSet fields;

  for (int level = cfg.levels - 1; level >= 0; --level) {
    const auto img = [&](ViewId v) -> const ImageGrid& { return pyramids[view_index(v)].levels[level]; };
    const StereoQuadruplet ql(img(kLeftT), img(kRightT), img(kLeftT1), img(kRightT1));
    const int h = ql.height();
    const int w = ql.width();

    if (level == cfg.levels - 1) {
      fields = initial_fields(base, h, w, 1 << level, cfg);
    } else {
      for (auto& [v, f] : fields) f = upsample_field(f, h, w);
    }

    const std::vector<int> spacings = hat_spacings(h, w);
    std::vector<ViewObjective> objectives;
    std::array<FieldState, 4> states;
    for (ViewId v : kAllViews) {
      objectives.emplace_back(ql, v, cfg.loss);
      states[view_index(v)].field = fields.at(v);
      states[view_index(v)].steps.assign(spacings.size(), cfg.step);
      states[view_index(v)].stalled.assign(spacings.size(), false);
    }

    // Masks fold in frame validity and stay fixed for a whole epoch, so the
    // energy being descended is continuous between refreshes.
    ViewObjective::Options opts;
    opts.validity_gate = false;
    MaskSet masks;
    bool ref_failed = false;
    double epoch_start = 0.0;  // data + smoothness of all fields when the epoch began
    for (int it = 0; it < cfg.iters_per_level; ++it) {
      const bool refresh = it % cfg.mask_refresh_every == 0;
      if (refresh) {
        MaskSet fresh;
        for (ViewId v : kAllViews) {
          if (cfg.refs.count(v))
            fresh.merge(occlusion_masks_for_reference(fields, v, cfg.consistency));
          else
            add_frame_masks(fields.at(v), fresh);
        }
        double variable = 0.0;
        for (const FieldState& s : states) variable += s.energy - s.breakdown.occlusion_penalty;
        if (it > 0 && masks_changed(masks, fresh) <= kSettledMaskFraction &&
            epoch_start - variable <= cfg.tolerance * std::abs(epoch_start))
          break;  // masks settled and the last epoch barely moved
        masks = std::move(fresh);
        ref_failed = false;
        epoch_start = 0.0;
        for (ViewId v : kAllViews) {
          FieldState& s = states[view_index(v)];
          s.breakdown = LossBreakdown{};
          s.energy = objectives[view_index(v)].evaluate(s.field, &masks, &s.breakdown, &s.grad, opts);
          check_finite(s.energy, s.grad, v, level, it);
          epoch_start += s.energy - s.breakdown.occlusion_penalty;
          for (std::size_t k = 0; k < spacings.size(); ++k) {
            if (s.stalled[k]) s.steps[k] = cfg.step;
            s.stalled[k] = false;
          }
        }
      }

      double step_sum = 0.0;
      for (ViewId v : kAllViews) {
        FieldState& s = states[view_index(v)];
        const std::size_t scale = static_cast<std::size_t>(it) % spacings.size();
        if (s.stalled[scale]) continue;
        const bool is_ref = cfg.refs.count(v) > 0;
        if (is_zero(s.grad)) {
          // stationary point, nothing to do until masks change
          std::fill(s.stalled.begin(), s.stalled.end(), true);
          continue;
        }
        const Grid dir_grid = descent_direction(s.grad, spacings[scale]);
        const auto dir = dir_grid.data();
        SceneFlowField trial(v, h, w);
        GradientField trial_grad;
        bool accepted = false;
        double t = s.steps[scale];
        for (int halving = 0; halving <= 20; ++halving, t *= 0.5) {
          const auto src = s.field.values.data();
          auto dst = trial.values.data();
          for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] - t * dir[i];
          LossBreakdown bd;
          const double e = objectives[view_index(v)].evaluate(trial, &masks, &bd, &trial_grad, opts);
          check_finite(e, trial_grad, v, level, it);
          if (e < s.energy) {
            s.field = trial;
            s.grad = std::move(trial_grad);
            s.breakdown = std::move(bd);
            s.energy = e;
            accepted = true;
            break;
          }
        }
        if (accepted) {
          if (is_ref) step_sum += t;
          s.steps[scale] = 2.0 * t;
        } else {
          s.stalled[scale] = true;
          if (is_ref) ref_failed = true;
        }
        fields[v] = s.field;
      }

      IterationRecord rec;
      rec.level = level;
      rec.iter = it;
      rec.mask_refresh = refresh;
      for (ViewId r : cfg.refs) {
        const LossBreakdown& bd = states[view_index(r)].breakdown;
        rec.total += bd.total;
        rec.data += bd.photometric();
        rec.smooth += bd.smoothness;
        rec.penalty += bd.occlusion_penalty;
      }
      rec.step = step_sum / static_cast<double>(cfg.refs.size());
      result.history.push_back(rec);
      if (progress) progress(rec);
    }
    if (level == 0) {
      result.converged = !ref_failed;
      result.masks.clear();
      for (ViewId r : cfg.refs)
        result.masks.merge(occlusion_masks_for_reference(fields, r, cfg.consistency));
      result.final_loss = total_loss(ql, fields, cfg.refs, result.masks, cfg.loss);
    }
  }
  result.fields = std::move(fields);
  return result;
}

}  // namespace ssflow
