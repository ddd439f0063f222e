#include "ssflow/costvol.hpp"

#include <algorithm>
#include <cmath>

#include "ssflow/error.hpp"
#include "ssflow/simd/kernels.hpp"

namespace ssflow {

FeatureGrid extract_features(const ImageGrid& img) {
  require(img.channels() == 1, "extract_features: single-channel image required");
  const int h = img.height();
  const int w = img.width();
  FeatureGrid f(h, w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      f.at(0, y, x) = img.at(y, x);
      f.at(1, y, x) = 0.5 * (img.at(y, std::min(x + 1, w - 1)) - img.at(y, std::max(x - 1, 0)));
      f.at(2, y, x) = 0.5 * (img.at(std::min(y + 1, h - 1), x) - img.at(std::max(y - 1, 0), x));
    }
  }
  return f;
}

FeatureGrid normalize_features(const FeatureGrid& f) {
  require(f.plane_size() >= 2, "normalize_features: need at least two pixels");
  FeatureGrid out = f;
  const double n = static_cast<double>(f.plane_size());
  for (int c = 0; c < f.channels; ++c) {
    const auto src = f.plane(c);
    double mean = 0.0;
    for (double v : src) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : src) var += (v - mean) * (v - mean);
    const double scale = std::sqrt(var / n) + 1e-8;
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] - mean) / scale;
  }
  return out;
}

FeatureGrid unit_normalize_pixels(const FeatureGrid& f) {
  FeatureGrid out = f;
  for (std::size_t i = 0; i < f.plane_size(); ++i) {
    double sq = 0.0;
    for (int c = 0; c < f.channels; ++c) sq += f.planes[c * f.plane_size() + i] * f.planes[c * f.plane_size() + i];
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (int c = 0; c < f.channels; ++c) out.planes[c * f.plane_size() + i] *= inv;
  }
  return out;
}

CostVolume correlation_volume(const FeatureGrid& f1, const FeatureGrid& f2, int radius) {
  require(f1.height == f2.height && f1.width == f2.width, "correlation_volume: dimension mismatch");
  require(f1.channels == f2.channels && f1.channels > 0, "correlation_volume: channel mismatch");
  require(radius >= 0, "correlation_volume: radius must be >= 0");
  const int h = f1.height;
  const int w = f1.width;
  CostVolume v{h, w, radius, {}};
  const std::size_t n = f1.plane_size();
  v.scores.assign(static_cast<std::size_t>(v.displacements()) * n, 0.0);
  const auto& k = simd::kernels();
  const double inv_c = 1.0 / f1.channels;
  for (int idx = 0; idx < v.displacements(); ++idx) {
    const auto [dx, dy] = v.offset(idx);
    double* plane = v.scores.data() + idx * n;
    const int x_begin = std::max(0, -dx);
    const int x_end = std::min(w, w - dx);
    if (x_end <= x_begin) continue;
    for (int y = 0; y < h; ++y) {
      const int ty = y + dy;
      if (ty < 0 || ty >= h) continue;
      double* acc = plane + static_cast<std::size_t>(y) * w + x_begin;
      for (int c = 0; c < f1.channels; ++c) {
        const double* a = f1.plane(c).data() + static_cast<std::size_t>(y) * w + x_begin;
        const double* b = f2.plane(c).data() + static_cast<std::size_t>(ty) * w + x_begin + dx;
        k.mul_acc(a, b, acc, static_cast<std::size_t>(x_end - x_begin));
      }
    }
    for (std::size_t i = 0; i < n; ++i) plane[i] *= inv_c;
  }
  return v;
}

ArgmaxMap cost_argmax(const CostVolume& v) {
  ArgmaxMap out{Grid(v.height, v.width, 2), ScalarField(v.height, v.width)};
  for (int y = 0; y < v.height; ++y) {
    for (int x = 0; x < v.width; ++x) {
      int best = 0;
      double best_score = v.at(y, x, 0);
      for (int k = 1; k < v.displacements(); ++k) {
        const double s = v.at(y, x, k);
        if (s > best_score) {
          best = k;
          best_score = s;
        }
      }
      const auto [dx, dy] = v.offset(best);
      out.displacement.at(y, x, 0) = dx;
      out.displacement.at(y, x, 1) = dy;
      out.score.at(y, x) = best_score;
    }
  }
  return out;
}

}  // namespace ssflow
