#pragma once

#include "ssflow/simd/kernels.hpp"

namespace ssflow::simd::detail {

extern const KernelTable kScalarTable;
#if defined(SSFLOW_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace ssflow::simd::detail
