#include <doctest.h>

#include <cstring>
#include <random>
#include <vector>

#include "ssflow/census.hpp"
#include "ssflow/costvol.hpp"
#include "ssflow/simd/kernels.hpp"

using namespace ssflow;

namespace {

std::vector<double> noise(std::size_t n, unsigned seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = uni(rng);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Restores the library-wide choice after a test forces one.
struct IsaGuard {
  simd::Isa saved = simd::active_isa();
  ~IsaGuard() { simd::force_isa(saved); }
};

}  // namespace

TEST_CASE("scalar kernels are always available") {
  IsaGuard guard;
  CHECK(simd::scalar_kernels().isa == simd::Isa::Scalar);
  CHECK(simd::force_isa(simd::Isa::Scalar));
  CHECK(simd::active_isa() == simd::Isa::Scalar);
  CHECK(&simd::kernels() == &simd::scalar_kernels());
}

TEST_CASE("vector kernels match scalar bit for bit") {
  const simd::KernelTable* v = simd::avx2_kernels();
  if (v == nullptr) {
    MESSAGE("AVX2 unavailable on this build or CPU; equivalence not exercised");
    return;
  }
  const simd::KernelTable& s = simd::scalar_kernels();
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 64u, 1001u}) {
    CAPTURE(n);
    const auto a = noise(n, 1 + n), b = noise(n, 2 + n);
    // ties for the hard census and the Hamming count
    std::vector<double> b_ties = b;
    for (std::size_t i = 0; i < n; i += 3) b_ties[i] = a[i];

    std::vector<double> os(n), ov(n);
    s.census_soft(a.data(), b.data(), os.data(), n, 0.81);
    v->census_soft(a.data(), b.data(), ov.data(), n, 0.81);
    CHECK(bit_equal(os, ov));
    s.census_soft_deriv(a.data(), b.data(), os.data(), n, 0.81);
    v->census_soft_deriv(a.data(), b.data(), ov.data(), n, 0.81);
    CHECK(bit_equal(os, ov));
    for (double tau : {0.0, 0.1}) {
      s.census_hard(a.data(), b_ties.data(), os.data(), n, tau);
      v->census_hard(a.data(), b_ties.data(), ov.data(), n, tau);
      CHECK(bit_equal(os, ov));
    }

    std::vector<double> as = noise(n, 9), av = as;
    s.soft_hamming_acc(a.data(), b.data(), as.data(), n, 0.1);
    v->soft_hamming_acc(a.data(), b.data(), av.data(), n, 0.1);
    CHECK(bit_equal(as, av));
    s.hard_hamming_acc(a.data(), b_ties.data(), as.data(), n);
    v->hard_hamming_acc(a.data(), b_ties.data(), av.data(), n);
    CHECK(bit_equal(as, av));
    s.mul_acc(a.data(), b.data(), as.data(), n);
    v->mul_acc(a.data(), b.data(), av.data(), n);
    CHECK(bit_equal(as, av));

    const auto r0 = noise(2 * n, 5), r1 = noise(2 * n, 6);
    std::vector<double> ds(n), dv(n);
    s.box_down(r0.data(), r1.data(), ds.data(), n);
    v->box_down(r0.data(), r1.data(), dv.data(), n);
    CHECK(bit_equal(ds, dv));
  }
}

TEST_CASE("library results do not depend on the selected kernels") {
  if (simd::avx2_kernels() == nullptr) return;
  IsaGuard guard;
  Grid img(23, 29);
  const auto n = noise(img.data().size(), 11, 0.0, 1.0);
  std::copy(n.begin(), n.end(), img.data().begin());
  Grid other = img;
  for (double& x : other.data()) x = x * x;

  const auto run = [&] {
    CensusParams p;
    std::vector<double> out;
    for (CensusMode m : {CensusMode::Soft, CensusMode::Hard}) {
      p.mode = m;
      const auto a = census_transform(img, p);
      const auto b = census_transform(other, p);
      out.insert(out.end(), a.planes.begin(), a.planes.end());
      const ScalarField d = census_distance(a, b);
      out.insert(out.end(), d.data().begin(), d.data().end());
    }
    const CostVolume v = correlation_volume(normalize_features(extract_features(img)),
                                            normalize_features(extract_features(other)), 2);
    out.insert(out.end(), v.scores.begin(), v.scores.end());
    const Grid down = downsample2(img);
    out.insert(out.end(), down.data().begin(), down.data().end());
    return out;
  };
  REQUIRE(simd::force_isa(simd::Isa::Scalar));
  const auto scalar = run();
  REQUIRE(simd::force_isa(simd::Isa::Avx2));
  const auto vec = run();
  CHECK(bit_equal(scalar, vec));
}
