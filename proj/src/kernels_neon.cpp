#include "macmi/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>
#include <cmath>
#include <cstdint>

namespace macmi {
namespace {

void sq_dist_neon(const double* yre, const double* yim, std::size_t stride,
                  const double* mre, const double* mim, std::size_t n_r,
                  std::size_t n, double* out) {
    const std::size_t n2 = n & ~std::size_t(1);
    for (std::size_t s = 0; s < n2; s += 2)
        vst1q_f64(out + s, vdupq_n_f64(0.0));
    for (std::size_t s = n2; s < n; ++s)
        out[s] = 0.0;
    for (std::size_t r = 0; r < n_r; ++r) {
        const double* re = yre + r * stride;
        const double* im = yim + r * stride;
        const float64x2_t cr = vdupq_n_f64(mre[r]);
        const float64x2_t ci = vdupq_n_f64(mim[r]);
        for (std::size_t s = 0; s < n2; s += 2) {
            const float64x2_t dr = vsubq_f64(vld1q_f64(re + s), cr);
            const float64x2_t di = vsubq_f64(vld1q_f64(im + s), ci);
            float64x2_t acc = vld1q_f64(out + s);
            acc = vfmaq_f64(acc, dr, dr);
            acc = vfmaq_f64(acc, di, di);
            vst1q_f64(out + s, acc);
        }
        for (std::size_t s = n2; s < n; ++s) {
            const double dr = re[s] - mre[r];
            const double di = im[s] - mim[r];
            out[s] += dr * dr + di * di;
        }
    }
}

// same range reduction + rational approximation as the AVX2 variant
float64x2_t exp2lane(float64x2_t x) {
    const float64x2_t log2e = vdupq_n_f64(1.4426950408889634073599);
    const float64x2_t c1 = vdupq_n_f64(6.93145751953125e-1);
    const float64x2_t c2 = vdupq_n_f64(1.42860682030941723212e-6);
    const float64x2_t p0 = vdupq_n_f64(1.26177193074810590878e-4);
    const float64x2_t p1 = vdupq_n_f64(3.02994407707441961300e-2);
    const float64x2_t p2 = vdupq_n_f64(9.99999999999999999910e-1);
    const float64x2_t q0 = vdupq_n_f64(3.00198505138664455042e-6);
    const float64x2_t q1 = vdupq_n_f64(2.52448340349684104192e-3);
    const float64x2_t q2 = vdupq_n_f64(2.27265548208155028766e-1);
    const float64x2_t q3 = vdupq_n_f64(2.00000000000000000005e0);
    const float64x2_t one = vdupq_n_f64(1.0);
    const float64x2_t two = vdupq_n_f64(2.0);

    const float64x2_t underflow = vdupq_n_f64(-708.0);
    const float64x2_t overflow = vdupq_n_f64(709.0);
    const uint64x2_t dead = vcltq_f64(x, underflow);
    x = vminq_f64(vmaxq_f64(x, underflow), overflow);

    const float64x2_t n = vrndnq_f64(vmulq_f64(x, log2e));
    float64x2_t r = vfmsq_f64(x, n, c1);
    r = vfmsq_f64(r, n, c2);
    const float64x2_t r2 = vmulq_f64(r, r);

    float64x2_t px = vfmaq_f64(p1, p0, r2);
    px = vfmaq_f64(p2, px, r2);
    px = vmulq_f64(px, r);
    float64x2_t qx = vfmaq_f64(q1, q0, r2);
    qx = vfmaq_f64(q2, qx, r2);
    qx = vfmaq_f64(q3, qx, r2);
    const float64x2_t er =
        vfmaq_f64(one, two, vdivq_f64(px, vsubq_f64(qx, px)));

    const int64x2_t ni = vcvtq_s64_f64(n);
    const int64x2_t ei =
        vshlq_n_s64(vaddq_s64(ni, vdupq_n_s64(1023)), 52);
    const float64x2_t scale = vreinterpretq_f64_s64(ei);
    const float64x2_t v = vmulq_f64(er, scale);
    return vbslq_f64(dead, vdupq_n_f64(0.0), v);
}

void vexp_neon(double* x, std::size_t n) {
    const std::size_t n2 = n & ~std::size_t(1);
    for (std::size_t s = 0; s < n2; s += 2)
        vst1q_f64(x + s, exp2lane(vld1q_f64(x + s)));
    for (std::size_t s = n2; s < n; ++s)
        x[s] = std::exp(x[s]);
}

} // namespace

const KernelOps kernels_neon = {sq_dist_neon, vexp_neon, "neon"};

} // namespace macmi

#endif
