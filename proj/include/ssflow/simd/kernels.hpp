#pragma once

#include <cstddef>

// Data-parallel row kernels behind census, distance, correlation and
// pyramid code. Every SIMD variant performs the same IEEE operations per
// element in the same order as the scalar reference, so results are
// bit-identical across variants.

namespace ssflow::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  const char* name;

  // out[i] = d / sqrt(sigma2 + d*d), d = neighbor[i] - center[i]
  void (*census_soft)(const double* center, const double* neighbor, double* out, std::size_t n,
                      double sigma2);
  // out[i] = sigma2 / ((sigma2 + d*d) * sqrt(sigma2 + d*d)), derivative of census_soft in d
  void (*census_soft_deriv)(const double* center, const double* neighbor, double* out,
                            std::size_t n, double sigma2);
  // out[i] = +1 if d > tau, -1 if d < -tau, else 0
  void (*census_hard)(const double* center, const double* neighbor, double* out, std::size_t n,
                      double tau);
  // acc[i] += e*e / (c + e*e), e = a[i] - b[i]
  void (*soft_hamming_acc)(const double* a, const double* b, double* acc, std::size_t n, double c);
  // acc[i] += (a[i] != b[i])
  void (*hard_hamming_acc)(const double* a, const double* b, double* acc, std::size_t n);
  // acc[i] += a[i] * b[i]
  void (*mul_acc)(const double* a, const double* b, double* acc, std::size_t n);
  // out[i] = 0.25 * ((r0[2i] + r0[2i+1]) + (r1[2i] + r1[2i+1]))
  void (*box_down)(const double* r0, const double* r1, double* out, std::size_t n_out);
};

const KernelTable& scalar_kernels();
/// nullptr when the build or the running CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// Kernels used by the library. Picks AVX2 when available unless the
/// SSFLOW_SIMD environment variable is set to "scalar".
const KernelTable& kernels();

/// Override the runtime choice (tests, benchmarks). Returns false if the
/// requested ISA is unavailable; the selection is then unchanged.
bool force_isa(Isa isa);
Isa active_isa();

}  // namespace ssflow::simd
