#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ssflow/geometry.hpp"
#include "ssflow/grid.hpp"
#include "ssflow/loss.hpp"

// Constructed quadruplets with analytic ground truth, used by the solver
// tests, the CLI fixtures and selfcheck.

namespace ssflow::synth {

/// Smooth random texture: 0.5 plus a sum of plane sinusoids with
/// wavelengths in [min_wavelength, max_wavelength]. Values lie in [0.05, 0.95].
class Texture {
 public:
  explicit Texture(std::uint64_t seed, int components = 12, double min_wavelength = 6.0,
                   double max_wavelength = 32.0);

  double operator()(double x, double y) const;
  ImageGrid render(int height, int width, double shift_x = 0.0, double shift_y = 0.0) const;

 private:
  struct Wave {
    double kx, ky, phase, amplitude;
  };
  std::vector<Wave> waves_;
};

/// Constant scene flow of a fronto-parallel plane: flow (u, v) and
/// disparities d0 at t and d1 at t+1.
struct ConstantMotion {
  double u = 3.0;
  double v = 2.0;
  double d0 = 4.0;
  double d1 = 4.0;
};

struct Scene {
  StereoQuadruplet images;
  FieldSet ground_truth;  // all four views
  MaskSet visible;        // per ordered pair of the three partners of each view
  std::map<ViewId, Mask> non_occluded;  // visible in all three pairs
};

Scene constant_motion_scene(int height, int width, const ConstantMotion& m, std::uint64_t seed);

/// Four identical textured images, zero ground truth.
Scene static_scene(int height, int width, std::uint64_t seed);

/// Static background plane behind a textured square that moves. All
/// quantities are integers so the surface seen by every pixel is exact.
struct SquareMotion {
  int background_disparity = 2;
  int square_disparity = 6;
  int square_size = 20;
  int square_x = 20;
  int square_y = 20;
  int u = 4;
  int v = 2;
};

Scene moving_square_scene(int height, int width, const SquareMotion& m, std::uint64_t seed);

/// Seeded SquareMotion with placement and motion varying per seed.
SquareMotion random_square_motion(int height, int width, std::uint64_t seed);

/// Independent uniform noise images in [0, 1].
StereoQuadruplet random_quadruplet(int height, int width, std::uint64_t seed);

/// Fields for all four views, every channel uniform in [-amplitude, amplitude].
FieldSet random_fields(int height, int width, double amplitude, std::uint64_t seed);

/// Mean endpoint error between two fields over `mask` (all four channels).
double field_epe(const SceneFlowField& a, const SceneFlowField& b, const Mask& mask);

/// Mean Euclidean norm of the four channels.
double mean_magnitude(const SceneFlowField& f);

}  // namespace ssflow::synth
