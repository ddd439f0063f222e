#include <cmath>

#include "kernels_internal.hpp"

namespace ssflow::simd::detail {

namespace {

void census_soft_scalar(const double* center, const double* neighbor, double* out, std::size_t n,
                        double sigma2) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = neighbor[i] - center[i];
    out[i] = d / std::sqrt(sigma2 + d * d);
  }
}

void census_soft_deriv_scalar(const double* center, const double* neighbor, double* out,
                              std::size_t n, double sigma2) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = neighbor[i] - center[i];
    const double s = sigma2 + d * d;
    out[i] = sigma2 / (s * std::sqrt(s));
  }
}

void census_hard_scalar(const double* center, const double* neighbor, double* out, std::size_t n,
                        double tau) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = neighbor[i] - center[i];
    out[i] = d > tau ? 1.0 : (d < -tau ? -1.0 : 0.0);
  }
}

void soft_hamming_acc_scalar(const double* a, const double* b, double* acc, std::size_t n,
                             double c) {
  for (std::size_t i = 0; i < n; ++i) {
    const double e = a[i] - b[i];
    const double e2 = e * e;
    acc[i] += e2 / (c + e2);
  }
}

void hard_hamming_acc_scalar(const double* a, const double* b, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += a[i] != b[i] ? 1.0 : 0.0;
}

void mul_acc_scalar(const double* a, const double* b, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += a[i] * b[i];
}

void box_down_scalar(const double* r0, const double* r1, double* out, std::size_t n_out) {
  for (std::size_t i = 0; i < n_out; ++i) {
    const double top = r0[2 * i] + r0[2 * i + 1];
    const double bottom = r1[2 * i] + r1[2 * i + 1];
    out[i] = 0.25 * (top + bottom);
  }
}

}  // namespace

const KernelTable kScalarTable{
    Isa::Scalar,           "scalar",
    census_soft_scalar,    census_soft_deriv_scalar, census_hard_scalar, soft_hamming_acc_scalar,
    hard_hamming_acc_scalar, mul_acc_scalar,         box_down_scalar,
};

}  // namespace ssflow::simd::detail
