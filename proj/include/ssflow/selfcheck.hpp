#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ssflow/geometry.hpp"

// Oracle suites shared by `ssflow selfcheck` and the acceptance binary.
namespace ssflow::selfcheck {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;  // key=value pairs on one line
};

struct GradientOptions {
  int quads = 20;
  int size = 16;
  std::uint64_t seed = 0;
  double h = 1e-4;
  double tolerance = 1e-4;
  double required_fraction = 0.99;  // over all coordinates of all quads
  double field_amplitude = 1.5;
  std::set<ViewId> refs{kLeftT, kRightT};
};

/// Analytic gradient vs central differences on random quads and fields.
SuiteResult gradient_suite(const GradientOptions& opt);

/// Hard-census pair loss of (I, g(I)) at zero displacement equals N rho(0)
/// for five strictly increasing g.
SuiteResult invariance_suite(std::uint64_t seed);

/// All-occluded pair loss equals lambda_occ * N.
SuiteResult occlusion_penalty_suite(std::uint64_t seed);

/// The two worked consistency cases: (5,0) vs (-5,0) visible inside the
/// frame, (5,0) vs (0,0) occluded everywhere.
SuiteResult consistency_suite();

/// KITTI flow and disparity PNG encode/write/read/decode over every 16-bit
/// code, plus an .sff field round trip. Files go to `scratch_dir`.
SuiteResult roundtrip_suite(std::uint64_t seed, const std::string& scratch_dir);

}  // namespace ssflow::selfcheck
