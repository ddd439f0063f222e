#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace ssflow::simd {

namespace {

bool cpu_has_avx2() {
#if defined(SSFLOW_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* initial_selection() {
  const char* env = std::getenv("SSFLOW_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") return &detail::kScalarTable;
  if (const KernelTable* avx2 = avx2_kernels()) return avx2;
  return &detail::kScalarTable;
}

std::atomic<const KernelTable*>& selection() {
  static std::atomic<const KernelTable*> table{initial_selection()};
  return table;
}

}  // namespace

const KernelTable& scalar_kernels() { return detail::kScalarTable; }

const KernelTable* avx2_kernels() {
#if defined(SSFLOW_HAVE_AVX2)
  static const bool available = cpu_has_avx2();
  return available ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& kernels() { return *selection().load(std::memory_order_acquire); }

bool force_isa(Isa isa) {
  const KernelTable* table = isa == Isa::Scalar ? &detail::kScalarTable : avx2_kernels();
  if (table == nullptr) return false;
  selection().store(table, std::memory_order_release);
  return true;
}

Isa active_isa() { return kernels().isa; }

}  // namespace ssflow::simd
