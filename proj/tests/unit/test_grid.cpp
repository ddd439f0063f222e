#include <doctest.h>

#include <random>

#include "ssflow/error.hpp"
#include "ssflow/grid.hpp"

using namespace ssflow;

namespace {

Grid random_grid(int h, int w, int c, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Grid g(h, w, c);
  for (double& v : g.data()) v = uni(rng);
  return g;
}

Grid row(std::initializer_list<double> v) {
  Grid g(1, static_cast<int>(v.size()));
  int x = 0;
  for (double d : v) g.at(0, x++) = d;
  return g;
}

}  // namespace

TEST_CASE("grid storage and channels") {
  Grid g(3, 4, 2, 0.5);
  CHECK(g.data().size() == 3 * 4 * 2);
  CHECK(g.pixel_count() == 12);
  g.at(2, 3, 1) = 7.0;
  const Grid c1 = g.channel(1);
  CHECK(c1.channels() == 1);
  CHECK(c1.at(2, 3) == 7.0);
  CHECK(c1.at(0, 0) == 0.5);
  Grid plane(3, 4, 1, 2.0);
  g.set_channel(0, plane);
  CHECK(g.at(1, 1, 0) == 2.0);
  CHECK(g.at(1, 1, 1) == 0.5);
  CHECK(g.all_finite());
  g.at(0, 0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(g.all_finite());

  CHECK_THROWS_AS(Grid(-1, 2), InvalidInput);
  CHECK_THROWS_AS(Grid(2, 2, 0), InvalidInput);
  CHECK_THROWS_AS(g.channel(2), InvalidInput);
  CHECK_THROWS_AS(g.set_channel(0, Grid(2, 2)), InvalidInput);
}

TEST_CASE("mask operations") {
  Mask a(2, 2, true), b(2, 2, false);
  b.set(0, 1, true);
  CHECK(a.all());
  CHECK(b.count() == 1);
  CHECK((a & b) == b);
  CHECK((a | b) == a);
  CHECK((~b).count() == 3);
  CHECK(mask_iou(a, b) == doctest::Approx(0.25));
  CHECK(mask_iou(Mask(2, 2, false), Mask(2, 2, false)) == 1.0);
  CHECK_THROWS_AS(a & Mask(3, 2), InvalidInput);
}

TEST_CASE("bilinear sampling") {
  Grid g(2, 2);
  g.at(0, 0) = 0.0;
  g.at(0, 1) = 0.1;
  g.at(1, 0) = 0.2;
  g.at(1, 1) = 0.3;
  Sample s = bilinear_sample(g, 0.0, 0.0);
  CHECK(s.in_bounds);
  CHECK(s.value[0] == 0.0);
  s = bilinear_sample(g, 0.5, 0.5);
  CHECK(s.in_bounds);
  CHECK(s.value[0] == doctest::Approx(0.15).epsilon(1e-15));
  s = bilinear_sample(g, -1.0, 0.0);
  CHECK_FALSE(s.in_bounds);
  CHECK(s.value[0] == 0.0);
  s = bilinear_sample(g, 1.0, 1.0);  // far corner is inside
  CHECK(s.in_bounds);
  CHECK(s.value[0] == doctest::Approx(0.3));
  CHECK_FALSE(bilinear_sample(g, 1.0 + 1e-9, 0.0).in_bounds);
  CHECK_THROWS_AS(bilinear_sample(Grid(), 0.0, 0.0), InvalidInput);
}

TEST_CASE("interpolation gradient matches differences") {
  const Grid g = random_grid(6, 7, 1, 3);
  const double x = 2.3, y = 3.6, h = 1e-6;
  double dx = 0, dy = 0;
  interpolate_gradient(g, bilinear_stencil(6, 7, x, y), 0, dx, dy);
  const auto f = [&](double px, double py) { return interpolate(g, bilinear_stencil(6, 7, px, py), 0); };
  CHECK(dx == doctest::Approx((f(x + h, y) - f(x - h, y)) / (2 * h)).epsilon(1e-6));
  CHECK(dy == doctest::Approx((f(x, y + h) - f(x, y - h)) / (2 * h)).epsilon(1e-6));
  // clamped axis has no gradient
  interpolate_gradient(g, bilinear_stencil(6, 7, -2.0, y), 0, dx, dy);
  CHECK(dx == 0.0);
}

TEST_CASE("warp") {
  const Grid img = random_grid(5, 6, 2, 1);
  WarpResult w = warp(img, Grid(5, 6, 2));
  CHECK(w.image == img);
  CHECK(w.valid.all());

  Grid d(1, 3, 2);
  for (int x = 0; x < 3; ++x) d.at(0, x, 0) = 1.0;
  w = warp(row({1.0, 2.0, 3.0}), d);
  CHECK(w.image.at(0, 0) == 2.0);
  CHECK(w.image.at(0, 1) == 3.0);
  CHECK(w.image.at(0, 2) == 3.0);
  CHECK(w.valid.at(0, 0));
  CHECK(w.valid.at(0, 1));
  CHECK_FALSE(w.valid.at(0, 2));

  const Grid r = random_grid(8, 8, 1, 9);
  Grid half(8, 8, 2);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) half.at(y, x, 0) = 0.5;
  w = warp(r, half);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 7; ++x) CHECK(w.image.at(y, x) == doctest::Approx(0.5 * (r.at(y, x) + r.at(y, x + 1))));

  CHECK_THROWS_AS(warp(r, Grid(8, 7, 2)), InvalidInput);
  CHECK_THROWS_AS(warp(r, Grid(8, 8, 1)), InvalidInput);
}

TEST_CASE("pyramid") {
  const Pyramid c = build_pyramid(Grid(32, 32, 1, 0.37), 3);
  for (const auto& l : c.levels)
    for (double v : l.data()) CHECK(v == doctest::Approx(0.37));

  Grid checker(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) checker.at(y, x) = (x + y) % 2;
  const Grid down = downsample2(checker);
  CHECK(down.height() == 2);
  for (double v : down.data()) CHECK(v == 0.5);

  const Pyramid p = build_pyramid(random_grid(64, 64, 1, 2), 4);
  REQUIRE(p.levels.size() == 4);
  CHECK(p.levels[1].width() == 32);
  CHECK(p.levels[2].width() == 16);
  CHECK(p.levels[3].height() == 8);

  CHECK_THROWS_AS(build_pyramid(random_grid(32, 32, 1, 2), 4), InvalidInput);
  CHECK_THROWS_AS(build_pyramid(random_grid(32, 32, 1, 2), 0), InvalidInput);
}

TEST_CASE("horizontal flip") {
  const Grid f = hflip(row({1.0, 2.0, 3.0}));
  CHECK(f.at(0, 0) == 3.0);
  CHECK(f.at(0, 2) == 1.0);
  const Grid sym = row({4.0, 5.0, 4.0});
  CHECK(hflip(sym) == sym);
  const Grid r = random_grid(7, 9, 3, 5);
  CHECK(hflip(hflip(r)) == r);
  Mask m(1, 3, false);
  m.set(0, 0, true);
  CHECK(hflip(m).at(0, 2));
  CHECK_FALSE(hflip(m).at(0, 0));
}
