#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "ssflow/geometry.hpp"
#include "ssflow/grid.hpp"
#include "ssflow/image_io.hpp"

namespace ssflow::kitti {

struct FlowMap {
  Grid flow;   // 2 channels (u, v)
  Mask valid;
};

struct DisparityMap {
  ScalarField disparity;
  Mask valid;
};

/// u = (ch1 - 2^15) / 64, v = (ch2 - 2^15) / 64, valid = ch3 > 0.
FlowMap decode_flow(const RawPng& png);
/// Inverse of decode_flow with round-to-nearest; invalid pixels encode as (0,0,0).
RawPng encode_flow(const FlowMap& flow);
/// disp = value / 256, value 0 = invalid.
DisparityMap decode_disparity(const RawPng& png);
/// Valid disparities encode to [1, 65535], invalid to 0.
RawPng encode_disparity(const DisparityMap& disp);

FlowMap read_flow(const std::string& path);
void write_flow(const std::string& path, const FlowMap& flow);
DisparityMap read_disparity(const std::string& path);
void write_disparity(const std::string& path, const DisparityMap& disp);

struct GroundTruthSceneFlow {
  FlowMap flow;
  DisparityMap disp_t;
  DisparityMap disp_next;

  int height() const { return flow.flow.height(); }
  int width() const { return flow.flow.width(); }
};

/// Dense prediction for the left view at time t (all pixels valid).
GroundTruthSceneFlow from_field(const SceneFlowField& f);
SceneFlowField to_field(const GroundTruthSceneFlow& g);

struct MetricReport {
  double epe_all = 0.0;   // mean joint 4-vector error over gt-valid pixels
  double epe_flow = 0.0;
  double epe_disp_t = 0.0;
  double epe_disp_next = 0.0;
  double d1 = 0.0;  // percent
  double d2 = 0.0;
  double fl = 0.0;
  double sf = 0.0;
  double koe_all = 0.0;  // equals sf
  std::size_t epe_pixels = 0;
  std::size_t flow_pixels = 0;
  std::size_t disp_t_pixels = 0;
  std::size_t disp_next_pixels = 0;
  std::size_t sf_pixels = 0;
  std::size_t d1_outliers = 0;
  std::size_t d2_outliers = 0;
  std::size_t fl_outliers = 0;
  std::size_t sf_outliers = 0;

  std::string to_report() const;
  static std::string csv_header();
  std::string csv_row() const;
};

inline constexpr double kAbsThreshold = 3.0;
inline constexpr double kRelThreshold = 0.05;

/// Joint end-point error. A pixel counts when any gt component is valid;
/// its error norm uses only the valid components. Throws InvalidInput if no
/// pixel is valid.
double epe(const SceneFlowField& pred, const GroundTruthSceneFlow& gt);

/// EPE plus D1/D2/Fl/SF outlier rates. Outliers exceed 3 px and 5% of the
/// gt magnitude; all rates share the denominator of pixels with every gt
/// component valid, so SF >= max(D1, D2, Fl).
MetricReport evaluate(const SceneFlowField& pred, const GroundTruthSceneFlow& gt);

/// Middlebury color wheel: hue by direction, saturation by magnitude
/// clipped at max_mag. Output is 3-channel RGB in [0,1].
ImageGrid flow_to_color(const Grid& flow, double max_mag);

/// Wheel position in [0, ncols) and normalized radius in [0, 1] for one vector.
struct WheelPosition {
  double hue_index;
  double radius;
};
WheelPosition wheel_position(double u, double v, double max_mag);
int wheel_size();

/// Disparity visualized as grayscale, 0 -> black, max_disp -> white.
ImageGrid disparity_to_gray(const ScalarField& disp, double max_disp);

}  // namespace ssflow::kitti
