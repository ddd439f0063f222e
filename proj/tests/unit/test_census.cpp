#include <doctest.h>

#include <cmath>
#include <random>

#include "ssflow/census.hpp"
#include "ssflow/error.hpp"

using namespace ssflow;

namespace {

ImageGrid noise(int h, int w, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  ImageGrid g(h, w);
  for (double& v : g.data()) v = uni(rng);
  return g;
}

CensusParams mode(CensusMode m) {
  CensusParams p;
  p.mode = m;
  return p;
}

}  // namespace

TEST_CASE("Charbonnier penalty") {
  const CharbonnierParams p;
  CHECK(charbonnier(0.0, p) == doctest::Approx(std::pow(10.0, -2.7)).epsilon(1e-12));
  CHECK(charbonnier(0.0, p) == doctest::Approx(1.995e-3).epsilon(1e-3));
  CHECK(charbonnier(1.0, p) == doctest::Approx(std::pow(1.0 + 1e-6, 0.45)).epsilon(1e-12));
  for (double x : {0.3, 1.7, 12.0}) {
    CHECK(charbonnier(x, p) == charbonnier(-x, p));
    const double h = 1e-6;
    CHECK(charbonnier_derivative(x, p) ==
          doctest::Approx((charbonnier(x + h, p) - charbonnier(x - h, p)) / (2 * h)).epsilon(1e-7));
    CHECK(charbonnier_derivative_from_value(x, charbonnier(x, p), p) ==
          doctest::Approx(charbonnier_derivative(x, p)).epsilon(1e-14));
  }
  CHECK(charbonnier_derivative(0.0, p) == 0.0);
}

TEST_CASE("census offsets") {
  const auto o = census_offsets(3);
  REQUIRE(o.size() == 8);
  CHECK(o.front() == std::pair{-1, -1});
  CHECK(o[3] == std::pair{-1, 0});
  CHECK(o[4] == std::pair{1, 0});
  CHECK(o.back() == std::pair{1, 1});
  CHECK(census_offsets(5).size() == 24);
  CHECK_THROWS_AS(census_offsets(4), InvalidInput);
  CHECK_THROWS_AS(census_offsets(1), InvalidInput);
}

TEST_CASE("census descriptors") {
  for (CensusMode m : {CensusMode::Soft, CensusMode::Hard}) {
    const auto d = census_transform(ImageGrid(5, 6, 1, 0.4), mode(m));
    CHECK(d.entries() == 8);
    for (double v : d.planes) CHECK(v == 0.0);
  }

  ImageGrid img(3, 3, 1, 0.5);
  img.at(1, 2) = 0.6;  // right neighbor of the center
  const auto soft = census_transform(img, mode(CensusMode::Soft));
  CHECK(soft.at(4, 1, 1) == doctest::Approx(0.1 / std::sqrt(0.81 + 0.01)).epsilon(1e-12));
  CHECK(soft.at(4, 1, 1) == doctest::Approx(0.1104).epsilon(1e-3));
  CHECK(soft.at(0, 1, 1) == 0.0);

  const auto hard = census_transform(img, mode(CensusMode::Hard));
  CHECK(hard.at(4, 1, 1) == 1.0);
  CHECK(hard.at(3, 1, 1) == 0.0);
  CHECK(hard.at(3, 1, 2) == -1.0);
  CensusParams thresh = mode(CensusMode::Hard);
  thresh.tau = 0.2;
  CHECK(census_transform(img, thresh).at(4, 1, 1) == 0.0);

  // strictly increasing maps keep hard descriptors
  const ImageGrid r = noise(9, 11, 4);
  ImageGrid t = r;
  for (double& v : t.data()) v = 0.5 * v + 0.2;
  CHECK(census_transform(r, mode(CensusMode::Hard)).planes == census_transform(t, mode(CensusMode::Hard)).planes);

  CHECK_THROWS_AS(census_transform(ImageGrid(3, 3, 3), mode(CensusMode::Soft)), InvalidInput);
  CHECK_THROWS_AS(census_transform(ImageGrid(), mode(CensusMode::Soft)), InvalidInput);
  CensusParams bad;
  bad.sigma2 = 0.0;
  CHECK_THROWS_AS(census_transform(r, bad), InvalidInput);
  bad = CensusParams{};
  bad.patch = 2;
  CHECK_THROWS_AS(census_transform(r, bad), InvalidInput);
}

TEST_CASE("census distance") {
  const ImageGrid r = noise(7, 8, 2);
  for (CensusMode m : {CensusMode::Soft, CensusMode::Hard}) {
    const auto a = census_transform(r, mode(m));
    const ScalarField d = census_distance(a, a);
    for (double v : d.data()) CHECK(v == 0.0);
  }

  // hard descriptors differing in all eight entries
  ImageGrid peak(3, 3, 1, 0.0), pit(3, 3, 1, 1.0);
  peak.at(1, 1) = 1.0;
  pit.at(1, 1) = 0.0;
  const auto hp = census_transform(peak, mode(CensusMode::Hard));
  const auto hq = census_transform(pit, mode(CensusMode::Hard));
  CHECK(census_distance(hp, hq).at(1, 1) == 8.0);

  CensusDescriptorGrid a{1, 1, 3, CensusMode::Soft, std::vector<double>(8, 0.0)};
  CensusDescriptorGrid b = a;
  a.planes[0] = 1.0 - 1e-12;
  b.planes[0] = -1.0 + 1e-12;
  CHECK(census_distance(a, b).at(0, 0) == doctest::Approx(4.0 / 4.1).epsilon(1e-9));
  CHECK(census_distance(a, b).at(0, 0) < 1.0);

  const auto c5 = census_transform(r, [] { CensusParams p; p.patch = 5; return p; }());
  CHECK_THROWS_AS(census_distance(census_transform(r, CensusParams{}), c5), InvalidInput);
  CHECK_THROWS_AS(census_distance(census_transform(r, mode(CensusMode::Soft)), census_transform(r, mode(CensusMode::Hard))),
                  InvalidInput);
  CHECK_THROWS_AS(census_distance(census_transform(r, CensusParams{}), census_transform(noise(7, 9, 1), CensusParams{})),
                  InvalidInput);
}

TEST_CASE("photometric residual") {
  const CharbonnierParams rho;
  const double r0 = charbonnier(0.0, rho);
  const ImageGrid a = noise(8, 10, 3);
  PhotometricResult p = photometric_residual(a, a, Grid(8, 10, 2), CensusParams{}, rho);
  CHECK(p.valid.all());
  for (double v : p.residual.data()) CHECK(v == r0);

  // target shifted right by one column; d = (1, 0) realigns it
  ImageGrid shifted(8, 10);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x) shifted.at(y, x) = a.at(y, std::max(x - 1, 0));
  Grid d(8, 10, 2);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x) d.at(y, x, 0) = 1.0;
  p = photometric_residual(a, shifted, d, CensusParams{}, rho);
  for (int y = 0; y < 8; ++y)
    for (int x = 1; x <= 7; ++x) CHECK(p.residual.at(y, x) == r0);
  CHECK_FALSE(p.valid.at(0, 9));
  CHECK(p.residual.at(0, 9) == 0.0);

  // illumination change under hard census
  ImageGrid bright = a;
  for (double& v : bright.data()) v = std::pow(v, 0.5);
  p = photometric_residual(a, bright, Grid(8, 10, 2), mode(CensusMode::Hard), rho);
  for (double v : p.residual.data()) CHECK(v == r0);
  // soft census is not invariant
  p = photometric_residual(a, bright, Grid(8, 10, 2), CensusParams{}, rho);
  CHECK(*std::max_element(p.residual.data().begin(), p.residual.data().end()) > r0);

  // color images sum per-channel distances
  ImageGrid rgb(8, 10, 3);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x)
      for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = a.at(y, x);
  const auto one = photometric_residual(a, bright, Grid(8, 10, 2), CensusParams{}, rho);
  ImageGrid rgb_bright = rgb;
  for (double& v : rgb_bright.data()) v = std::pow(v, 0.5);
  const auto three = photometric_residual(rgb, rgb_bright, Grid(8, 10, 2), CensusParams{}, rho);
  CHECK(three.distance.at(4, 4) == doctest::Approx(3.0 * one.distance.at(4, 4)));

  CHECK_THROWS_AS(photometric_residual(a, noise(8, 9, 1), Grid(8, 10, 2), CensusParams{}, rho), InvalidInput);
  CHECK_THROWS_AS(photometric_residual(a, a, Grid(8, 9, 2), CensusParams{}, rho), InvalidInput);
}
