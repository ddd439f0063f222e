#include "ssflow/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>

#include "ssflow/census.hpp"
#include "ssflow/field_io.hpp"
#include "ssflow/kitti.hpp"
#include "ssflow/loss.hpp"
#include "ssflow/occlusion.hpp"
#include "ssflow/synth.hpp"

namespace ssflow::selfcheck {

namespace {

// 8-bit levels keep every g strictly increasing after rounding.
ImageGrid quantized_noise(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> level(0, 255);
  ImageGrid img(h, w, 1);
  for (double& v : img.data()) v = level(rng) / 255.0;
  return img;
}

ImageGrid apply(const ImageGrid& img, const std::function<double(double)>& g) {
  ImageGrid out = img;
  for (double& v : out.data()) v = g(v);
  return out;
}

}  // namespace

SuiteResult gradient_suite(const GradientOptions& opt) {
  SuiteResult r{"gradient", false, ""};
  LossConfig cfg;
  std::size_t coords = 0;
  double within = 0.0;
  double max_rel = 0.0;
  double worst_quad = 1.0;
  for (int i = 0; i < opt.quads; ++i) {
    const std::uint64_t s = opt.seed * 7919 + static_cast<std::uint64_t>(i);
    const StereoQuadruplet q = synth::random_quadruplet(opt.size, opt.size, 2 * s + 1);
    const FieldSet fields = synth::random_fields(opt.size, opt.size, opt.field_amplitude, 2 * s + 2);
    const MaskSet masks = all_visible_masks(opt.refs, opt.size, opt.size);
    const FiniteDiffReport rep = finite_diff_check(q, fields, opt.refs, masks, cfg, opt.h, opt.tolerance);
    coords += rep.coordinates;
    within += std::round(rep.fraction_within * static_cast<double>(rep.coordinates));
    max_rel = std::max(max_rel, rep.max_rel_error);
    worst_quad = std::min(worst_quad, rep.fraction_within);
  }
  const double fraction = coords ? within / static_cast<double>(coords) : 0.0;
  r.passed = coords > 0 && fraction >= opt.required_fraction;
  std::ostringstream os;
  os << "quads=" << opt.quads << " coordinates=" << coords << " fraction_within=" << fraction
     << " tolerance=" << opt.tolerance << " worst_quad_fraction=" << worst_quad
     << " max_rel_err=" << max_rel;
  r.detail = os.str();
  return r;
}

SuiteResult invariance_suite(std::uint64_t seed) {
  SuiteResult r{"invariance", true, ""};
  const int n = 24;
  const ImageGrid img = quantized_noise(n, n, seed);
  LossConfig cfg;
  cfg.census.mode = CensusMode::Hard;
  const Grid zero(n, n, 2);
  const Mask visible(n, n, true);
  const double expected = static_cast<double>(n * n) * charbonnier(0.0, cfg.rho);

  const std::vector<std::pair<std::string, std::function<double(double)>>> maps = {
      {"affine", [](double x) { return 0.6 * x + 0.25; }},
      {"gamma0.5", [](double x) { return std::sqrt(x); }},
      {"gamma2", [](double x) { return x * x; }},
      {"logistic", [](double x) { return 1.0 / (1.0 + std::exp(-8.0 * (x - 0.5))); }},
      {"piecewise", [](double x) { return x < 0.5 ? 0.3 * x : 0.15 + 1.5 * (x - 0.5); }},
  };
  std::ostringstream os;
  os << "expected=" << expected;
  // Every pixel must be exactly rho(0); the total is a float sum of N
  // equal terms, so it may differ from the product by accumulated rounding.
  const double rho0 = charbonnier(0.0, cfg.rho);
  const double sum_tol = static_cast<double>(n * n) * 2.220446049250313e-16 * expected;
  for (const auto& [name, g] : maps) {
    const PairLossResult res = pair_loss(img, apply(img, g), zero, visible, cfg);
    const bool pixels_exact =
        std::all_of(res.pixel_loss.data().begin(), res.pixel_loss.data().end(),
                    [rho0](double v) { return v == rho0; });
    const bool sum_ok = std::abs(res.value - expected) <= sum_tol;
    os << " " << name << "=" << res.value << (pixels_exact ? "" : "(pixels differ)");
    if (!pixels_exact || !sum_ok) r.passed = false;
  }
  r.detail = os.str();
  return r;
}

SuiteResult occlusion_penalty_suite(std::uint64_t seed) {
  SuiteResult r{"occlusion_penalty", false, ""};
  const int n = 20;
  const StereoQuadruplet q = synth::random_quadruplet(n, n, seed);
  LossConfig cfg;
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  Grid d(n, n, 2);
  for (double& v : d.data()) v = uni(rng);
  const double v = pair_loss(q.at(kLeftT), q.at(kRightT), d, Mask(n, n, false), cfg).value;
  const double expected = 12.4 * static_cast<double>(n * n);
  r.passed = v == expected;
  std::ostringstream os;
  os << "pixels=" << n * n << " loss=" << v << " expected=" << expected;
  r.detail = os.str();
  return r;
}

SuiteResult consistency_suite() {
  SuiteResult r{"consistency", false, ""};
  const int h = 12, w = 16;
  const ConsistencyParams p{0.01, 0.5};
  Grid fwd(h, w, 2), back(h, w, 2), still(h, w, 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      fwd.at(y, x, 0) = 5.0;
      back.at(y, x, 0) = -5.0;
    }
  }
  const Mask consistent = consistency_occlusion(fwd, back, p);
  bool case1 = true;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) case1 = case1 && consistent.at(y, x) == (x + 5 <= w - 1);
  const bool case2 = consistency_occlusion(fwd, still, p).none();
  r.passed = case1 && case2;
  r.detail = std::string("opposite_pair_visible_inside=") + (case1 ? "yes" : "no") +
             " zero_backward_all_occluded=" + (case2 ? "yes" : "no");
  return r;
}

SuiteResult roundtrip_suite(std::uint64_t seed, const std::string& scratch_dir) {
  namespace fs = std::filesystem;
  SuiteResult r{"roundtrip", true, ""};
  fs::create_directories(scratch_dir);
  std::ostringstream os;

  // Every 16-bit code appears in both flow channels; 2 x 65536 pixels.
  const int w = 256, h = 512;
  kitti::FlowMap flow{Grid(h, w, 2), Mask(h, w, true)};
  kitti::DisparityMap disp{ScalarField(h, w), Mask(h, w, true)};
  for (int i = 0; i < h * w; ++i) {
    const int y = i / w, x = i % w;
    const int code = i % 65536;
    flow.flow.at(y, x, 0) = (code - 32768) / 64.0;
    flow.flow.at(y, x, 1) = ((65535 - code) - 32768) / 64.0;
    disp.disparity.at(y, x) = code / 256.0;
    disp.valid.set(y, x, code != 0);
  }
  flow.valid.set(0, 1, false);  // invalid pixel encodes as (0, 0, 0)

  const std::string flow_path = (fs::path(scratch_dir) / "roundtrip_flow.png").string();
  const std::string disp_path = (fs::path(scratch_dir) / "roundtrip_disp.png").string();
  const RawPng flow_png = kitti::encode_flow(flow);
  write_png(flow_path, flow_png);
  const RawPng flow_back = read_png(flow_path);
  const kitti::FlowMap flow_dec = kitti::decode_flow(flow_back);
  bool flow_ok = flow_back.samples == flow_png.samples && flow_dec.valid == flow.valid;
  for (int y = 0; y < h && flow_ok; ++y)
    for (int x = 0; x < w; ++x)
      if (flow.valid.at(y, x) && (flow_dec.flow.at(y, x, 0) != flow.flow.at(y, x, 0) ||
                                  flow_dec.flow.at(y, x, 1) != flow.flow.at(y, x, 1)))
        flow_ok = false;

  const RawPng disp_png = kitti::encode_disparity(disp);
  write_png(disp_path, disp_png);
  const RawPng disp_back = read_png(disp_path);
  const kitti::DisparityMap disp_dec = kitti::decode_disparity(disp_back);
  bool disp_ok = disp_back.samples == disp_png.samples && disp_dec.valid == disp.valid;
  for (int y = 0; y < h && disp_ok; ++y)
    for (int x = 0; x < w; ++x)
      if (disp.valid.at(y, x) && disp_dec.disparity.at(y, x) != disp.disparity.at(y, x)) disp_ok = false;

  const bool codes_ok = flow_png.at(0, 0, 0) == 0 && flow_png.at(0, 0, 1) == 65535 &&
                        flow_png.at(128, 0, 0) == 32768 && flow_png.at(255, 255, 0) == 65535 &&
                        disp_png.at(0, 0, 0) == 0 && disp_png.at(255, 255, 0) == 65535;

  const FieldSet fields = synth::random_fields(9, 13, 40.0, seed);
  const std::string sff_path = (fs::path(scratch_dir) / "roundtrip.sff").string();
  write_field(sff_path, fields.at(kRightT1));
  const SceneFlowField back = read_field(sff_path);
  const bool sff_ok = back.reference == kRightT1 && back.values == fields.at(kRightT1).values;

  r.passed = flow_ok && disp_ok && codes_ok && sff_ok;
  os << "flow=" << (flow_ok ? "exact" : "MISMATCH") << " disparity=" << (disp_ok ? "exact" : "MISMATCH")
     << " boundary_codes=" << (codes_ok ? "ok" : "MISMATCH") << " sff=" << (sff_ok ? "exact" : "MISMATCH");
  r.detail = os.str();
  return r;
}

}  // namespace ssflow::selfcheck
