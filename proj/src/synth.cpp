#include "ssflow/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "ssflow/error.hpp"

namespace ssflow::synth {

Texture::Texture(std::uint64_t seed, int components, double min_wavelength,
                 double max_wavelength) {
  require(components > 0, "Texture: need at least one component");
  require(min_wavelength > 0.0 && max_wavelength >= min_wavelength,
          "Texture: invalid wavelength range");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> wavelength(min_wavelength, max_wavelength);
  std::uniform_real_distribution<double> weight(0.5, 1.0);
  double total = 0.0;
  for (int i = 0; i < components; ++i) {
    const double theta = angle(rng);
    const double k = 2.0 * std::numbers::pi / wavelength(rng);
    waves_.push_back({k * std::cos(theta), k * std::sin(theta), angle(rng), weight(rng)});
    total += waves_.back().amplitude;
  }
  for (auto& w : waves_) w.amplitude *= 0.45 / total;
}

double Texture::operator()(double x, double y) const {
  double v = 0.5;
  for (const auto& w : waves_) v += w.amplitude * std::sin(w.kx * x + w.ky * y + w.phase);
  return v;
}

ImageGrid Texture::render(int height, int width, double shift_x, double shift_y) const {
  ImageGrid img(height, width, 1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) img.at(y, x) = (*this)(x + shift_x, y + shift_y);
  return img;
}

namespace {

SceneFlowField constant_field(ViewId ref, int h, int w, double u, double v, double dr, double dother) {
  SceneFlowField f(ref, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      f.values.at(y, x, SceneFlowField::U) = u;
      f.values.at(y, x, SceneFlowField::V) = v;
      f.values.at(y, x, SceneFlowField::DispRef) = dr;
      f.values.at(y, x, SceneFlowField::DispOther) = dother;
    }
  }
  return f;
}

// Visible where the target position of every pair stays inside the frame.
void in_frame_visibility(Scene& s) {
  const int h = s.images.height();
  const int w = s.images.width();
  for (ViewId v : kAllViews) {
    const PairDisplacements d = displacements_from_sceneflow(s.ground_truth.at(v));
    Mask all(h, w, true);
    for (PairKind k : kAllPairKinds) {
      const Grid& g = d.get(k).values;
      Mask m(h, w, false);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double tx = x + g.at(y, x, 0);
          const double ty = y + g.at(y, x, 1);
          m.set(y, x, tx >= 0.0 && tx <= w - 1 && ty >= 0.0 && ty <= h - 1);
        }
      }
      all = all & m;
      s.visible[{v, partner(v, k)}] = std::move(m);
    }
    s.non_occluded[v] = std::move(all);
  }
}

}  // namespace

Scene constant_motion_scene(int height, int width, const ConstantMotion& m, std::uint64_t seed) {
  require(height > 0 && width > 0, "constant_motion_scene: empty image");
  const Texture t(seed);
  Scene s;
  s.images = StereoQuadruplet(t.render(height, width), t.render(height, width, m.d0, 0.0),
                              t.render(height, width, -m.u, -m.v),
                              t.render(height, width, -m.u + m.d1, -m.v));
  const double ur = m.u - m.d1 + m.d0;
  s.ground_truth[kLeftT] = constant_field(kLeftT, height, width, m.u, m.v, m.d0, m.d1);
  s.ground_truth[kRightT] = constant_field(kRightT, height, width, ur, m.v, m.d0, m.d1);
  s.ground_truth[kLeftT1] = constant_field(kLeftT1, height, width, -m.u, -m.v, m.d1, m.d0);
  s.ground_truth[kRightT1] = constant_field(kRightT1, height, width, -ur, -m.v, m.d1, m.d0);
  in_frame_visibility(s);
  return s;
}

Scene static_scene(int height, int width, std::uint64_t seed) {
  return constant_motion_scene(height, width, ConstantMotion{0.0, 0.0, 0.0, 0.0}, seed);
}

namespace {

enum Surface : int { Background = 0, Square = 1 };

struct SquareLayout {
  const SquareMotion& m;
  int width, height;

  // Square origin as seen in a view. Left image at t is canonical; the
  // right image sees everything shifted by -disparity.
  int origin_x(ViewId v) const {
    int x = m.square_x + (v.time == Time::TPlus1 ? m.u : 0);
    if (v.side == Side::Right) x -= m.square_disparity;
    return x;
  }
  int origin_y(ViewId v) const { return m.square_y + (v.time == Time::TPlus1 ? m.v : 0); }

  Surface surface(ViewId v, int x, int y) const {
    const int ox = origin_x(v);
    const int oy = origin_y(v);
    return (x >= ox && x < ox + m.square_size && y >= oy && y < oy + m.square_size) ? Square
                                                                                      : Background;
  }
};

}  // namespace

Scene moving_square_scene(int height, int width, const SquareMotion& m, std::uint64_t seed) {
  require(height > 0 && width > 0, "moving_square_scene: empty image");
  require(m.square_size > 0, "moving_square_scene: square size must be > 0");
  require(m.background_disparity >= 0 && m.square_disparity >= 0,
          "moving_square_scene: disparities must be >= 0");
  const Texture bg(seed);
  const Texture fg(seed ^ 0x9e3779b97f4a7c15ULL, 12, 4.0, 12.0);
  const SquareLayout layout{m, width, height};

  std::array<ImageGrid, 4> img;
  Scene s;
  for (ViewId v : kAllViews) {
    ImageGrid& I = img[view_index(v)];
    I = ImageGrid(height, width, 1);
    const double shift = v.side == Side::Right ? m.background_disparity : 0.0;
    const int su = v.time == Time::T ? m.u : -m.u;
    const int sv = v.time == Time::T ? m.v : -m.v;
    SceneFlowField f(v, height, width);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (layout.surface(v, x, y) == Square) {
          I.at(y, x) = fg(x - layout.origin_x(v), y - layout.origin_y(v));
          f.values.at(y, x, SceneFlowField::U) = su;
          f.values.at(y, x, SceneFlowField::V) = sv;
          f.values.at(y, x, SceneFlowField::DispRef) = m.square_disparity;
          f.values.at(y, x, SceneFlowField::DispOther) = m.square_disparity;
        } else {
          I.at(y, x) = bg(x + shift, y);
          f.values.at(y, x, SceneFlowField::DispRef) = m.background_disparity;
          f.values.at(y, x, SceneFlowField::DispOther) = m.background_disparity;
        }
      }
    }
    s.ground_truth[v] = std::move(f);
  }
  s.images = StereoQuadruplet(img[0], img[1], img[2], img[3]);

  // A pair is visible where the target pixel shows the same surface.
  for (ViewId v : kAllViews) {
    const PairDisplacements d = displacements_from_sceneflow(s.ground_truth.at(v));
    Mask all(height, width, true);
    for (PairKind k : kAllPairKinds) {
      const ViewId target = partner(v, k);
      const Grid& g = d.get(k).values;
      Mask vis(height, width, false);
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const int tx = static_cast<int>(std::lround(x + g.at(y, x, 0)));
          const int ty = static_cast<int>(std::lround(y + g.at(y, x, 1)));
          if (tx < 0 || tx >= width || ty < 0 || ty >= height) continue;
          vis.set(y, x, layout.surface(v, x, y) == layout.surface(target, tx, ty));
        }
      }
      all = all & vis;
      s.visible[{v, target}] = std::move(vis);
    }
    s.non_occluded[v] = std::move(all);
  }
  return s;
}

SquareMotion random_square_motion(int height, int width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  SquareMotion m;
  m.background_disparity = pick(1, 3);
  m.square_disparity = m.background_disparity + pick(2, 5);
  m.square_size = std::max(8, std::min(height, width) / 3 + pick(-2, 2));
  m.u = pick(-4, 4);
  m.v = pick(-3, 3);
  const int margin = 8;
  m.square_x = pick(margin + m.square_disparity, std::max(margin + m.square_disparity, width - m.square_size - margin));
  m.square_y = pick(margin, std::max(margin, height - m.square_size - margin));
  return m;
}

StereoQuadruplet random_quadruplet(int height, int width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::array<ImageGrid, 4> img;
  for (auto& I : img) {
    I = ImageGrid(height, width, 1);
    for (double& v : I.data()) v = uni(rng);
  }
  return StereoQuadruplet(img[0], img[1], img[2], img[3]);
}

FieldSet random_fields(int height, int width, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-amplitude, amplitude);
  FieldSet out;
  for (ViewId v : kAllViews) {
    SceneFlowField f(v, height, width);
    for (double& x : f.values.data()) x = uni(rng);
    out[v] = std::move(f);
  }
  return out;
}

double field_epe(const SceneFlowField& a, const SceneFlowField& b, const Mask& mask) {
  require(a.values.same_shape(b.values), "field_epe: shape mismatch");
  require(mask.height() == a.height() && mask.width() == a.width(), "field_epe: mask shape mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (!mask.at(y, x)) continue;
      double sq = 0.0;
      for (int c = 0; c < 4; ++c) {
        const double e = a.values.at(y, x, c) - b.values.at(y, x, c);
        sq += e * e;
      }
      sum += std::sqrt(sq);
      ++n;
    }
  }
  require(n > 0, "field_epe: empty mask");
  return sum / static_cast<double>(n);
}

double mean_magnitude(const SceneFlowField& f) {
  return field_epe(f, SceneFlowField(f.reference, f.height(), f.width()),
                   Mask(f.height(), f.width(), true));
}

}  // namespace ssflow::synth
