#pragma once

#include "stochmech/simd/kernels.hpp"

namespace stochmech::simd::detail {

const KernelTable& scalar_table();
#if defined(STOCHMECH_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace stochmech::simd::detail
