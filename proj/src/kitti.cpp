#include "ssflow/kitti.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ssflow/error.hpp"

namespace ssflow::kitti {

namespace {

constexpr double kFlowOffset = 32768.0;
constexpr double kFlowScale = 64.0;
constexpr double kDispScale = 256.0;

std::uint16_t encode_u16(double v) {
  return static_cast<std::uint16_t>(std::clamp(std::round(v), 0.0, 65535.0));
}

}  // namespace

FlowMap decode_flow(const RawPng& png) {
  if (png.bit_depth != 16 || png.channels != 3)
    throw FormatError("KITTI flow: expected 16-bit 3-channel PNG, got " +
                      std::to_string(png.bit_depth) + "-bit " + std::to_string(png.channels) +
                      "-channel");
  FlowMap out{Grid(png.height, png.width, 2), Mask(png.height, png.width, false)};
  for (int y = 0; y < png.height; ++y) {
    for (int x = 0; x < png.width; ++x) {
      out.flow.at(y, x, 0) = (png.at(y, x, 0) - kFlowOffset) / kFlowScale;
      out.flow.at(y, x, 1) = (png.at(y, x, 1) - kFlowOffset) / kFlowScale;
      out.valid.set(y, x, png.at(y, x, 2) > 0);
    }
  }
  return out;
}

RawPng encode_flow(const FlowMap& flow) {
  require(flow.flow.channels() == 2, "encode_flow: expected 2 channels");
  require(flow.valid.height() == flow.flow.height() && flow.valid.width() == flow.flow.width(),
          "encode_flow: mask shape mismatch");
  RawPng png{flow.flow.width(), flow.flow.height(), 3, 16, {}};
  png.samples.reserve(flow.flow.pixel_count() * 3);
  for (int y = 0; y < png.height; ++y) {
    for (int x = 0; x < png.width; ++x) {
      if (flow.valid.at(y, x)) {
        png.samples.push_back(encode_u16(flow.flow.at(y, x, 0) * kFlowScale + kFlowOffset));
        png.samples.push_back(encode_u16(flow.flow.at(y, x, 1) * kFlowScale + kFlowOffset));
        png.samples.push_back(1);
      } else {
        png.samples.insert(png.samples.end(), {0, 0, 0});
      }
    }
  }
  return png;
}

DisparityMap decode_disparity(const RawPng& png) {
  if (png.bit_depth != 16 || png.channels != 1)
    throw FormatError("KITTI disparity: expected 16-bit single-channel PNG, got " +
                      std::to_string(png.bit_depth) + "-bit " + std::to_string(png.channels) +
                      "-channel");
  DisparityMap out{ScalarField(png.height, png.width), Mask(png.height, png.width, false)};
  for (int y = 0; y < png.height; ++y) {
    for (int x = 0; x < png.width; ++x) {
      const std::uint16_t v = png.at(y, x, 0);
      out.disparity.at(y, x) = v / kDispScale;
      out.valid.set(y, x, v > 0);
    }
  }
  return out;
}

RawPng encode_disparity(const DisparityMap& disp) {
  require(disp.disparity.channels() == 1, "encode_disparity: expected 1 channel");
  require(disp.valid.height() == disp.disparity.height() &&
              disp.valid.width() == disp.disparity.width(),
          "encode_disparity: mask shape mismatch");
  RawPng png{disp.disparity.width(), disp.disparity.height(), 1, 16, {}};
  png.samples.reserve(disp.disparity.pixel_count());
  for (int y = 0; y < png.height; ++y) {
    for (int x = 0; x < png.width; ++x) {
      if (!disp.valid.at(y, x)) {
        png.samples.push_back(0);
        continue;
      }
      // a valid pixel must not collapse onto the invalid code
      png.samples.push_back(std::max<std::uint16_t>(encode_u16(disp.disparity.at(y, x) * kDispScale), 1));
    }
  }
  return png;
}

FlowMap read_flow(const std::string& path) { return decode_flow(read_png(path)); }
void write_flow(const std::string& path, const FlowMap& flow) { write_png(path, encode_flow(flow)); }
DisparityMap read_disparity(const std::string& path) { return decode_disparity(read_png(path)); }
void write_disparity(const std::string& path, const DisparityMap& disp) {
  write_png(path, encode_disparity(disp));
}

GroundTruthSceneFlow from_field(const SceneFlowField& f) {
  const int h = f.height();
  const int w = f.width();
  GroundTruthSceneFlow g{{Grid(h, w, 2), Mask(h, w, true)},
                         {ScalarField(h, w), Mask(h, w, true)},
                         {ScalarField(h, w), Mask(h, w, true)}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      g.flow.flow.at(y, x, 0) = f.values.at(y, x, SceneFlowField::U);
      g.flow.flow.at(y, x, 1) = f.values.at(y, x, SceneFlowField::V);
      g.disp_t.disparity.at(y, x) = f.values.at(y, x, SceneFlowField::DispRef);
      g.disp_next.disparity.at(y, x) = f.values.at(y, x, SceneFlowField::DispOther);
    }
  }
  return g;
}

SceneFlowField to_field(const GroundTruthSceneFlow& g) {
  SceneFlowField f(kLeftT, g.height(), g.width());
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      f.values.at(y, x, SceneFlowField::U) = g.flow.flow.at(y, x, 0);
      f.values.at(y, x, SceneFlowField::V) = g.flow.flow.at(y, x, 1);
      f.values.at(y, x, SceneFlowField::DispRef) = g.disp_t.disparity.at(y, x);
      f.values.at(y, x, SceneFlowField::DispOther) = g.disp_next.disparity.at(y, x);
    }
  }
  return f;
}

namespace {

void check_shapes(const SceneFlowField& pred, const GroundTruthSceneFlow& gt) {
  require(pred.height() == gt.height() && pred.width() == gt.width(),
          "metrics: prediction and ground truth dimensions differ");
  require(gt.disp_t.disparity.same_dims(gt.flow.flow) &&
              gt.disp_next.disparity.same_dims(gt.flow.flow),
          "metrics: ground truth components differ in size");
}

bool is_outlier(double err, double gt_magnitude) {
  return err > kAbsThreshold && err > kRelThreshold * gt_magnitude;
}

}  // namespace

double epe(const SceneFlowField& pred, const GroundTruthSceneFlow& gt) {
  return evaluate(pred, gt).epe_all;
}

MetricReport evaluate(const SceneFlowField& pred, const GroundTruthSceneFlow& gt) {
  check_shapes(pred, gt);
  MetricReport r;
  double sum_joint = 0.0;
  double sum_flow = 0.0;
  double sum_d1 = 0.0;
  double sum_d2 = 0.0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      const bool fv = gt.flow.valid.at(y, x);
      const bool d1v = gt.disp_t.valid.at(y, x);
      const bool d2v = gt.disp_next.valid.at(y, x);
      if (!fv && !d1v && !d2v) continue;
      double sq = 0.0;
      double flow_err = 0.0;
      double d1_err = 0.0;
      double d2_err = 0.0;
      if (fv) {
        const double eu = pred.values.at(y, x, SceneFlowField::U) - gt.flow.flow.at(y, x, 0);
        const double ev = pred.values.at(y, x, SceneFlowField::V) - gt.flow.flow.at(y, x, 1);
        sq += eu * eu + ev * ev;
        flow_err = std::sqrt(eu * eu + ev * ev);
        sum_flow += flow_err;
        ++r.flow_pixels;
      }
      if (d1v) {
        const double e = pred.values.at(y, x, SceneFlowField::DispRef) - gt.disp_t.disparity.at(y, x);
        sq += e * e;
        d1_err = std::abs(e);
        sum_d1 += d1_err;
        ++r.disp_t_pixels;
      }
      if (d2v) {
        const double e =
            pred.values.at(y, x, SceneFlowField::DispOther) - gt.disp_next.disparity.at(y, x);
        sq += e * e;
        d2_err = std::abs(e);
        sum_d2 += d2_err;
        ++r.disp_next_pixels;
      }
      sum_joint += std::sqrt(sq);
      ++r.epe_pixels;
      if (fv && d1v && d2v) {
        const double gu = gt.flow.flow.at(y, x, 0);
        const double gv = gt.flow.flow.at(y, x, 1);
        const bool o1 = is_outlier(d1_err, std::abs(gt.disp_t.disparity.at(y, x)));
        const bool o2 = is_outlier(d2_err, std::abs(gt.disp_next.disparity.at(y, x)));
        const bool of = is_outlier(flow_err, std::sqrt(gu * gu + gv * gv));
        ++r.sf_pixels;
        r.d1_outliers += o1;
        r.d2_outliers += o2;
        r.fl_outliers += of;
        r.sf_outliers += (o1 || o2 || of);
      }
    }
  }
  if (r.epe_pixels == 0) throw InvalidInput("metrics: ground truth has no valid pixels");
  r.epe_all = sum_joint / static_cast<double>(r.epe_pixels);
  if (r.flow_pixels) r.epe_flow = sum_flow / static_cast<double>(r.flow_pixels);
  if (r.disp_t_pixels) r.epe_disp_t = sum_d1 / static_cast<double>(r.disp_t_pixels);
  if (r.disp_next_pixels) r.epe_disp_next = sum_d2 / static_cast<double>(r.disp_next_pixels);
  if (r.sf_pixels) {
    const double n = static_cast<double>(r.sf_pixels);
    r.d1 = 100.0 * static_cast<double>(r.d1_outliers) / n;
    r.d2 = 100.0 * static_cast<double>(r.d2_outliers) / n;
    r.fl = 100.0 * static_cast<double>(r.fl_outliers) / n;
    r.sf = 100.0 * static_cast<double>(r.sf_outliers) / n;
  }
  r.koe_all = r.sf;
  return r;
}

std::string MetricReport::to_report() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "epe_all=" << epe_all << "\n";
  os << "epe_flow=" << epe_flow << "\n";
  os << "epe_disp_t=" << epe_disp_t << "\n";
  os << "epe_disp_next=" << epe_disp_next << "\n";
  os.precision(2);
  os << "koe_all=" << koe_all << "\n";
  os << "d1_all=" << d1 << "\n";
  os << "d2_all=" << d2 << "\n";
  os << "fl_all=" << fl << "\n";
  os << "sf_all=" << sf << "\n";
  os << "pixels=" << epe_pixels << "\n";
  os << "sf_pixels=" << sf_pixels << "\n";
  return os.str();
}

std::string MetricReport::csv_header() {
  return "epe_all,epe_flow,epe_disp_t,epe_disp_next,d1_all,d2_all,fl_all,sf_all,koe_all,pixels";
}

std::string MetricReport::csv_row() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << epe_all << "," << epe_flow << "," << epe_disp_t << "," << epe_disp_next << "," << d1
     << "," << d2 << "," << fl << "," << sf << "," << koe_all << "," << epe_pixels;
  return os.str();
}

namespace {

// Relative lengths of the hue transitions (red-yellow, yellow-green, ...).
constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
constexpr int kWheelSize = RY + YG + GC + CB + BM + MR;

const std::array<std::array<int, 3>, kWheelSize>& color_wheel() {
  static const auto wheel = [] {
    std::array<std::array<int, 3>, kWheelSize> w{};
    int k = 0;
    for (int i = 0; i < RY; ++i) w[k++] = {255, 255 * i / RY, 0};
    for (int i = 0; i < YG; ++i) w[k++] = {255 - 255 * i / YG, 255, 0};
    for (int i = 0; i < GC; ++i) w[k++] = {0, 255, 255 * i / GC};
    for (int i = 0; i < CB; ++i) w[k++] = {0, 255 - 255 * i / CB, 255};
    for (int i = 0; i < BM; ++i) w[k++] = {255 * i / BM, 0, 255};
    for (int i = 0; i < MR; ++i) w[k++] = {255, 0, 255 - 255 * i / MR};
    return w;
  }();
  return wheel;
}

}  // namespace

int wheel_size() { return kWheelSize; }

WheelPosition wheel_position(double u, double v, double max_mag) {
  require(max_mag > 0.0, "flow_to_color: max_mag must be > 0");
  const double radius = std::min(std::sqrt(u * u + v * v) / max_mag, 1.0);
  // + 0.0 folds -0 into +0 so that a purely horizontal vector maps to index 0
  const double a = std::atan2(-(v + 0.0), -u) / std::numbers::pi;
  return {(a + 1.0) / 2.0 * (kWheelSize - 1), radius};
}

ImageGrid flow_to_color(const Grid& flow, double max_mag) {
  require(flow.channels() >= 2, "flow_to_color: expected a 2-channel flow");
  require(max_mag > 0.0, "flow_to_color: max_mag must be > 0");
  const auto& wheel = color_wheel();
  ImageGrid out(flow.height(), flow.width(), 3);
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const WheelPosition p = wheel_position(flow.at(y, x, 0), flow.at(y, x, 1), max_mag);
      const int k0 = std::clamp(static_cast<int>(p.hue_index), 0, kWheelSize - 1);
      const int k1 = (k0 + 1) % kWheelSize;
      const double f = p.hue_index - k0;
      for (int b = 0; b < 3; ++b) {
        const double col = (1.0 - f) * wheel[k0][b] / 255.0 + f * wheel[k1][b] / 255.0;
        out.at(y, x, b) = 1.0 - p.radius * (1.0 - col);
      }
    }
  }
  return out;
}

ImageGrid disparity_to_gray(const ScalarField& disp, double max_disp) {
  require(max_disp > 0.0, "disparity_to_gray: max_disp must be > 0");
  ImageGrid out(disp.height(), disp.width(), 1);
  for (int y = 0; y < disp.height(); ++y)
    for (int x = 0; x < disp.width(); ++x)
      out.at(y, x) = std::clamp(disp.at(y, x) / max_disp, 0.0, 1.0);
  return out;
}

}  // namespace ssflow::kitti
