#include <cstdlib>
#include <string_view>

#include "mcce/simd/kernels.hpp"
#include "kernels_internal.hpp"

namespace mcce::simd {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* avx2_kernels() {
#if defined(MCCE_HAVE_AVX2)
  if (cpu_has_avx2_fma()) return &detail::avx2_table();
#endif
  return nullptr;
}

const KernelTable& active() {
  static const KernelTable* selected = [] {
    const char* forced = std::getenv("MCCE_SIMD");
    if (forced != nullptr && std::string_view(forced) == "scalar") return &scalar_kernels();
    if (const KernelTable* fast = avx2_kernels()) return fast;
    return &scalar_kernels();
  }();
  return *selected;
}

void transpose(const double* src, std::size_t rows, std::size_t cols, double* transposed) {
  constexpr std::size_t tile = 16;
  for (std::size_t i0 = 0; i0 < rows; i0 += tile) {
    for (std::size_t j0 = 0; j0 < cols; j0 += tile) {
      const std::size_t i1 = i0 + tile < rows ? i0 + tile : rows;
      const std::size_t j1 = j0 + tile < cols ? j0 + tile : cols;
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) transposed[j * rows + i] = src[i * cols + j];
    }
  }
}

}  // namespace mcce::simd
