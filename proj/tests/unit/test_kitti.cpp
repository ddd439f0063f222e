#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "ssflow/error.hpp"
#include "ssflow/kitti.hpp"
#include "ssflow/synth.hpp"

using namespace ssflow;
using namespace ssflow::kitti;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "ssflow_test_kitti";
  fs::create_directories(p);
  return p;
}

GroundTruthSceneFlow filled(int h, int w) {
  return {{Grid(h, w, 2), Mask(h, w, true)}, {ScalarField(h, w), Mask(h, w, true)}, {ScalarField(h, w), Mask(h, w, true)}};
}

}  // namespace

TEST_CASE("flow PNG codec") {
  RawPng png{2, 1, 3, 16, {32768, 32768, 1, 100, 200, 0}};
  const FlowMap f = decode_flow(png);
  CHECK(f.flow.at(0, 0, 0) == 0.0);
  CHECK(f.flow.at(0, 0, 1) == 0.0);
  CHECK(f.valid.at(0, 0));
  CHECK_FALSE(f.valid.at(0, 1));

  FlowMap one{Grid(1, 2, 2), Mask(1, 2, true)};
  one.flow.at(0, 0, 0) = 1.0;
  one.flow.at(0, 1, 1) = -1.0 / 64;
  one.valid.set(0, 1, true);
  const RawPng e = encode_flow(one);
  CHECK(e.at(0, 0, 0) == 32832);
  CHECK(e.at(0, 0, 2) == 1);
  CHECK(e.at(0, 1, 1) == 32767);
  one.valid.set(0, 1, false);
  const RawPng inv = encode_flow(one);
  CHECK(inv.at(0, 1, 0) == 0);
  CHECK(inv.at(0, 1, 1) == 0);
  CHECK(inv.at(0, 1, 2) == 0);

  // out of range values saturate
  one.flow.at(0, 0, 0) = 1e6;
  CHECK(encode_flow(one).at(0, 0, 0) == 65535);

  CHECK_THROWS_AS(decode_flow(RawPng{1, 1, 3, 8, {0, 0, 0}}), FormatError);
  CHECK_THROWS_AS(decode_flow(RawPng{1, 1, 1, 16, {0}}), FormatError);
  CHECK_THROWS_AS(encode_flow(FlowMap{Grid(1, 1, 1), Mask(1, 1)}), InvalidInput);
  CHECK_THROWS_AS(encode_flow(FlowMap{Grid(1, 1, 2), Mask(1, 2)}), InvalidInput);
}

TEST_CASE("disparity PNG codec") {
  const DisparityMap d = decode_disparity(RawPng{2, 1, 1, 16, {256, 0}});
  CHECK(d.disparity.at(0, 0) == 1.0);
  CHECK(d.valid.at(0, 0));
  CHECK_FALSE(d.valid.at(0, 1));

  DisparityMap m{ScalarField(1, 3), Mask(1, 3, true)};
  m.disparity.at(0, 0) = 45.75;
  m.disparity.at(0, 1) = 0.0;  // valid zero keeps a nonzero code
  m.valid.set(0, 2, false);
  const RawPng e = encode_disparity(m);
  CHECK(e.at(0, 0, 0) == 11712);
  CHECK(e.at(0, 1, 0) == 1);
  CHECK(e.at(0, 2, 0) == 0);
  CHECK_THROWS_AS(decode_disparity(RawPng{1, 1, 3, 16, {0, 0, 0}}), FormatError);
}

TEST_CASE("file round trip over every code") {
  FlowMap f{Grid(256, 256, 2), Mask(256, 256, true)};
  DisparityMap d{ScalarField(256, 256), Mask(256, 256, true)};
  for (int i = 0; i < 65536; ++i) {
    const int y = i / 256, x = i % 256;
    f.flow.at(y, x, 0) = (i - 32768) / 64.0;
    f.flow.at(y, x, 1) = (32767 - i) / 64.0;
    d.disparity.at(y, x) = i / 256.0;
    d.valid.set(y, x, i != 0);
  }
  const std::string fp = (scratch() / "flow.png").string();
  const std::string dp = (scratch() / "disp.png").string();
  write_flow(fp, f);
  write_disparity(dp, d);
  const FlowMap fb = read_flow(fp);
  const DisparityMap db = read_disparity(dp);
  CHECK(fb.flow == f.flow);
  CHECK(fb.valid == f.valid);
  CHECK(db.valid == d.valid);
  for (int i = 1; i < 65536; ++i) CHECK(db.disparity.at(i / 256, i % 256) == d.disparity.at(i / 256, i % 256));
  CHECK_THROWS_AS(read_flow((scratch() / "missing.png").string()), FormatError);
}

TEST_CASE("field conversion") {
  const FieldSet r = synth::random_fields(3, 4, 5.0, 1);
  const GroundTruthSceneFlow g = from_field(r.at(kLeftT));
  CHECK(g.flow.valid.all());
  CHECK(to_field(g).values == r.at(kLeftT).values);
}

TEST_CASE("end-point error") {
  const FieldSet r = synth::random_fields(6, 6, 3.0, 2);
  CHECK(epe(r.at(kLeftT), from_field(r.at(kLeftT))) == 0.0);

  GroundTruthSceneFlow g = filled(2, 2);
  g.flow.valid = Mask(2, 2, false);
  g.disp_t.valid = Mask(2, 2, false);
  g.disp_next.valid = Mask(2, 2, false);
  CHECK_THROWS_AS(epe(SceneFlowField(kLeftT, 2, 2), g), InvalidInput);
  g.flow.valid.set(1, 0, true);
  SceneFlowField p(kLeftT, 2, 2);
  p.values.at(1, 0, 0) = 3.0;
  p.values.at(1, 0, 1) = 4.0;
  p.values.at(1, 0, 2) = 100.0;  // disparity gt invalid here: ignored
  CHECK(epe(p, g) == 5.0);

  // constant error vector e on exact constant-valid gt
  const GroundTruthSceneFlow exact = from_field(r.at(kLeftT));
  SceneFlowField shifted = r.at(kLeftT);
  const double e[4] = {0.5, -1.0, 2.0, 0.25};
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x)
      for (int c = 0; c < 4; ++c) shifted.values.at(y, x, c) += e[c];
  CHECK(epe(shifted, exact) == doctest::Approx(std::sqrt(0.25 + 1 + 4 + 0.0625)).epsilon(1e-12));

  CHECK_THROWS_AS(evaluate(SceneFlowField(kLeftT, 3, 3), g), InvalidInput);
}

TEST_CASE("outlier rules") {
  GroundTruthSceneFlow g = filled(1, 2);
  g.flow.flow.at(0, 0, 0) = 100.0;  // |gt flow| = 100
  g.disp_t.disparity.at(0, 1) = 10.0;
  SceneFlowField p = to_field(g);
  p.values.at(0, 0, 0) += 4.0;  // 4 > 3 but 4 < 5
  p.values.at(0, 1, 2) += 3.5;  // 3.5 > 3 and > 0.5
  const MetricReport m = evaluate(p, g);
  CHECK(m.fl_outliers == 0);
  CHECK(m.d1_outliers == 1);
  CHECK(m.d1 == 50.0);
  CHECK(m.sf == 50.0);
  CHECK(m.koe_all == m.sf);

  const MetricReport zero = evaluate(to_field(g), g);
  CHECK(zero.d1 == 0.0);
  CHECK(zero.d2 == 0.0);
  CHECK(zero.fl == 0.0);
  CHECK(zero.sf == 0.0);
  CHECK(zero.to_report().find("sf_all=0.00") != std::string::npos);
  CHECK(MetricReport::csv_header().rfind("epe_all,", 0) == 0);
}

TEST_CASE("metrics against a brute-force oracle") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> uni(0.0, 20.0), noise(-6.0, 6.0);
  std::bernoulli_distribution valid(0.8);
  for (int trial = 0; trial < 10; ++trial) {
    const int h = 16, w = 16;
    GroundTruthSceneFlow g = filled(h, w);
    SceneFlowField p(kLeftT, h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        g.flow.flow.at(y, x, 0) = uni(rng) - 10;
        g.flow.flow.at(y, x, 1) = uni(rng) - 10;
        g.disp_t.disparity.at(y, x) = uni(rng);
        g.disp_next.disparity.at(y, x) = uni(rng);
        g.flow.valid.set(y, x, valid(rng));
        g.disp_t.valid.set(y, x, valid(rng));
        g.disp_next.valid.set(y, x, valid(rng));
        p.values.at(y, x, 0) = g.flow.flow.at(y, x, 0) + noise(rng);
        p.values.at(y, x, 1) = g.flow.flow.at(y, x, 1) + noise(rng);
        p.values.at(y, x, 2) = g.disp_t.disparity.at(y, x) + noise(rng);
        p.values.at(y, x, 3) = g.disp_next.disparity.at(y, x) + noise(rng);
      }
    double sum = 0;
    int n = 0, all = 0, sf = 0, fl = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const bool a = g.flow.valid.at(y, x), b = g.disp_t.valid.at(y, x), c = g.disp_next.valid.at(y, x);
        if (!a && !b && !c) continue;
        const double du = a ? p.values.at(y, x, 0) - g.flow.flow.at(y, x, 0) : 0;
        const double dv = a ? p.values.at(y, x, 1) - g.flow.flow.at(y, x, 1) : 0;
        const double d0 = b ? p.values.at(y, x, 2) - g.disp_t.disparity.at(y, x) : 0;
        const double d1 = c ? p.values.at(y, x, 3) - g.disp_next.disparity.at(y, x) : 0;
        sum += std::sqrt(du * du + dv * dv + d0 * d0 + d1 * d1);
        ++n;
        if (a && b && c) {
          ++all;
          const double fe = std::hypot(du, dv), fm = std::hypot(g.flow.flow.at(y, x, 0), g.flow.flow.at(y, x, 1));
          const bool fo = fe > 3 && fe > 0.05 * fm;
          const bool o0 = std::abs(d0) > 3 && std::abs(d0) > 0.05 * g.disp_t.disparity.at(y, x);
          const bool o1 = std::abs(d1) > 3 && std::abs(d1) > 0.05 * g.disp_next.disparity.at(y, x);
          fl += fo;
          sf += fo || o0 || o1;
        }
      }
    const MetricReport m = evaluate(p, g);
    CHECK(std::abs(m.epe_all - sum / n) <= 1e-12);
    CHECK(std::abs(m.fl - 100.0 * fl / all) <= 1e-12);
    CHECK(std::abs(m.sf - 100.0 * sf / all) <= 1e-12);
    CHECK(m.sf >= m.d1);
    CHECK(m.sf >= m.d2);
    CHECK(m.sf >= m.fl);
  }
}

TEST_CASE("flow colors") {
  Grid zero(1, 1, 2);
  const ImageGrid white = flow_to_color(zero, 1.0);
  for (int c = 0; c < 3; ++c) CHECK(white.at(0, 0, c) == 1.0);

  Grid right(1, 1, 2);
  right.at(0, 0, 0) = 2.0;
  const ImageGrid red = flow_to_color(right, 2.0);
  CHECK(red.at(0, 0, 0) == 1.0);
  CHECK(red.at(0, 0, 1) == 0.0);
  CHECK(red.at(0, 0, 2) == 0.0);
  CHECK(wheel_position(2.0, 0.0, 2.0).hue_index == 0.0);
  CHECK(wheel_position(10.0, 0.0, 2.0).radius == 1.0);  // clipped

  // rotating every vector by the same angle shifts the hue index uniformly
  const double span = wheel_size() - 1;
  const double phi = std::numbers::pi / 3;
  for (double t = 0.1; t < 2 * std::numbers::pi; t += 0.7) {
    const WheelPosition a = wheel_position(std::cos(t), std::sin(t), 1.0);
    const WheelPosition b = wheel_position(std::cos(t + phi), std::sin(t + phi), 1.0);
    const double shift = std::fmod(b.hue_index - a.hue_index + 2 * span, span);
    CHECK(shift == doctest::Approx(phi / (2 * std::numbers::pi) * span).epsilon(1e-9));
  }

  // a radially symmetric field has point-symmetric saturation
  Grid radial(9, 9, 2);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) {
      radial.at(y, x, 0) = x - 4;
      radial.at(y, x, 1) = y - 4;
    }
  const ImageGrid img = flow_to_color(radial, 6.0);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) {
      const double r1 = wheel_position(x - 4, y - 4, 6.0).radius;
      const double r2 = wheel_position(4 - x, 4 - y, 6.0).radius;
      CHECK(r1 == r2);
    }
  CHECK(img.channels() == 3);

  CHECK_THROWS_AS(flow_to_color(zero, 0.0), InvalidInput);
  CHECK_THROWS_AS(flow_to_color(Grid(1, 1, 1), 1.0), InvalidInput);

  ScalarField d(1, 3);
  d.at(0, 1) = 5.0;
  d.at(0, 2) = 50.0;
  const ImageGrid gray = disparity_to_gray(d, 10.0);
  CHECK(gray.at(0, 0) == 0.0);
  CHECK(gray.at(0, 1) == 0.5);
  CHECK(gray.at(0, 2) == 1.0);
  CHECK_THROWS_AS(disparity_to_gray(d, 0.0), InvalidInput);
}
