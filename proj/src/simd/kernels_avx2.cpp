#include <immintrin.h>

#include <cmath>

#include "kernels_internal.hpp"

namespace ssflow::simd::detail {

namespace {

constexpr std::size_t kLanes = 4;

void census_soft_avx2(const double* center, const double* neighbor, double* out, std::size_t n,
                      double sigma2) {
  const __m256d s2 = _mm256_set1_pd(sigma2);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(neighbor + i), _mm256_loadu_pd(center + i));
    const __m256d den = _mm256_sqrt_pd(_mm256_add_pd(s2, _mm256_mul_pd(d, d)));
    _mm256_storeu_pd(out + i, _mm256_div_pd(d, den));
  }
  for (; i < n; ++i) {
    const double d = neighbor[i] - center[i];
    out[i] = d / std::sqrt(sigma2 + d * d);
  }
}

void census_soft_deriv_avx2(const double* center, const double* neighbor, double* out,
                            std::size_t n, double sigma2) {
  const __m256d s2 = _mm256_set1_pd(sigma2);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(neighbor + i), _mm256_loadu_pd(center + i));
    const __m256d s = _mm256_add_pd(s2, _mm256_mul_pd(d, d));
    _mm256_storeu_pd(out + i, _mm256_div_pd(s2, _mm256_mul_pd(s, _mm256_sqrt_pd(s))));
  }
  for (; i < n; ++i) {
    const double d = neighbor[i] - center[i];
    const double s = sigma2 + d * d;
    out[i] = sigma2 / (s * std::sqrt(s));
  }
}

void census_hard_avx2(const double* center, const double* neighbor, double* out, std::size_t n,
                      double tau) {
  const __m256d pos = _mm256_set1_pd(tau);
  const __m256d neg = _mm256_set1_pd(-tau);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d minus_one = _mm256_set1_pd(-1.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(neighbor + i), _mm256_loadu_pd(center + i));
    const __m256d gt = _mm256_and_pd(_mm256_cmp_pd(d, pos, _CMP_GT_OQ), one);
    const __m256d lt = _mm256_and_pd(_mm256_cmp_pd(d, neg, _CMP_LT_OQ), minus_one);
    _mm256_storeu_pd(out + i, _mm256_or_pd(gt, lt));
  }
  for (; i < n; ++i) {
    const double d = neighbor[i] - center[i];
    out[i] = d > tau ? 1.0 : (d < -tau ? -1.0 : 0.0);
  }
}

void soft_hamming_acc_avx2(const double* a, const double* b, double* acc, std::size_t n,
                           double c) {
  const __m256d cc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d e = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d e2 = _mm256_mul_pd(e, e);
    const __m256d q = _mm256_div_pd(e2, _mm256_add_pd(cc, e2));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), q));
  }
  for (; i < n; ++i) {
    const double e = a[i] - b[i];
    const double e2 = e * e;
    acc[i] += e2 / (c + e2);
  }
}

void hard_hamming_acc_avx2(const double* a, const double* b, double* acc, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d ne = _mm256_cmp_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), _CMP_NEQ_UQ);
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_and_pd(ne, one)));
  }
  for (; i < n; ++i) acc[i] += a[i] != b[i] ? 1.0 : 0.0;
}

void mul_acc_avx2(const double* a, const double* b, double* acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), p));
  }
  for (; i < n; ++i) acc[i] += a[i] * b[i];
}

void box_down_avx2(const double* r0, const double* r1, double* out, std::size_t n_out) {
  const __m256d quarter = _mm256_set1_pd(0.25);
  std::size_t i = 0;
  for (; i + kLanes <= n_out; i += kLanes) {
    // hadd yields [a0+a1, b0+b1, a2+a3, b2+b3]; the permute restores pixel order.
    const __m256d top = _mm256_permute4x64_pd(
        _mm256_hadd_pd(_mm256_loadu_pd(r0 + 2 * i), _mm256_loadu_pd(r0 + 2 * i + 4)), 0xD8);
    const __m256d bottom = _mm256_permute4x64_pd(
        _mm256_hadd_pd(_mm256_loadu_pd(r1 + 2 * i), _mm256_loadu_pd(r1 + 2 * i + 4)), 0xD8);
    _mm256_storeu_pd(out + i, _mm256_mul_pd(quarter, _mm256_add_pd(top, bottom)));
  }
  for (; i < n_out; ++i) {
    const double top = r0[2 * i] + r0[2 * i + 1];
    const double bottom = r1[2 * i] + r1[2 * i + 1];
    out[i] = 0.25 * (top + bottom);
  }
}

}  // namespace

const KernelTable kAvx2Table{
    Isa::Avx2,           "avx2",
    census_soft_avx2,    census_soft_deriv_avx2, census_hard_avx2, soft_hamming_acc_avx2,
    hard_hamming_acc_avx2, mul_acc_avx2,         box_down_avx2,
};

}  // namespace ssflow::simd::detail
