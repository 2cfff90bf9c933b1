#include "macmi/kernels.hpp"

namespace macmi {

const KernelOps& active_kernels() {
    static const KernelOps& ops = []() -> const KernelOps& {
#if defined(MACMI_HAVE_AVX2_TU) && defined(__x86_64__)
        if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
            return kernels_avx2;
#endif
#if defined(MACMI_HAVE_NEON_TU) && defined(__aarch64__)
        return kernels_neon;
#endif
        return kernels_scalar;
    }();
    return ops;
}

} // namespace macmi
