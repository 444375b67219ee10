#pragma once

#include "psd/kernels.hpp"

namespace psd::kernels::detail {

const KernelTable& scalar_kernels();
#if defined(PSD_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

}  // namespace psd::kernels::detail
