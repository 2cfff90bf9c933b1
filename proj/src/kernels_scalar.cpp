#include "macmi/kernels.hpp"

#include <cmath>

namespace macmi {
namespace {

void sq_dist_ref(const double* yre, const double* yim, std::size_t stride,
                 const double* mre, const double* mim, std::size_t n_r,
                 std::size_t n, double* out) {
    for (std::size_t s = 0; s < n; ++s)
        out[s] = 0.0;
    for (std::size_t r = 0; r < n_r; ++r) {
        const double* re = yre + r * stride;
        const double* im = yim + r * stride;
        const double cr = mre[r];
        const double ci = mim[r];
        for (std::size_t s = 0; s < n; ++s) {
            const double dr = re[s] - cr;
            const double di = im[s] - ci;
            out[s] += dr * dr + di * di;
        }
    }
}

void vexp_ref(double* x, std::size_t n) {
    for (std::size_t s = 0; s < n; ++s)
        x[s] = std::exp(x[s]);
}

} // namespace

const KernelOps kernels_scalar = {sq_dist_ref, vexp_ref, "scalar"};

} // namespace macmi
