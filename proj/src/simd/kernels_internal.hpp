#pragma once

#include "mcce/simd/kernels.hpp"

namespace mcce::simd::detail {

// Defined in kernels_avx2.cpp when MCCE_HAVE_AVX2 is set.
const KernelTable& avx2_table();

}  // namespace mcce::simd::detail
