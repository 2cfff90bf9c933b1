#pragma once

#include <cstddef>

namespace macmi {

// Hot numeric primitives behind the posterior / likelihood loops. One scalar
// reference implementation plus SIMD variants selected once at startup; all
// variants are equivalence-tested against the reference.
struct KernelOps {
    // out[s] = sum_r (yre[r*stride+s]-mre[r])^2 + (yim[r*stride+s]-mim[r])^2
    void (*sq_dist)(const double* yre, const double* yim, std::size_t stride,
                    const double* mre, const double* mim, std::size_t n_r,
                    std::size_t n, double* out);
    // x[i] = exp(x[i])
    void (*vexp)(double* x, std::size_t n);
    const char* name;
};

extern const KernelOps kernels_scalar;
#if defined(MACMI_HAVE_AVX2_TU)
extern const KernelOps kernels_avx2;
#endif
#if defined(MACMI_HAVE_NEON_TU)
extern const KernelOps kernels_neon;
#endif

// best variant the current CPU supports (decided once, no per-call cost)
const KernelOps& active_kernels();

} // namespace macmi
