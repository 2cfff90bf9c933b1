#include "macmi/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <immintrin.h>

namespace macmi {
namespace {

void sq_dist_avx2(const double* yre, const double* yim, std::size_t stride,
                  const double* mre, const double* mim, std::size_t n_r,
                  std::size_t n, double* out) {
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t s = 0; s < n4; s += 4)
        _mm256_storeu_pd(out + s, _mm256_setzero_pd());
    for (std::size_t s = n4; s < n; ++s)
        out[s] = 0.0;
    for (std::size_t r = 0; r < n_r; ++r) {
        const double* re = yre + r * stride;
        const double* im = yim + r * stride;
        const __m256d cr = _mm256_set1_pd(mre[r]);
        const __m256d ci = _mm256_set1_pd(mim[r]);
        for (std::size_t s = 0; s < n4; s += 4) {
            const __m256d dr = _mm256_sub_pd(_mm256_loadu_pd(re + s), cr);
            const __m256d di = _mm256_sub_pd(_mm256_loadu_pd(im + s), ci);
            __m256d acc = _mm256_loadu_pd(out + s);
            acc = _mm256_fmadd_pd(dr, dr, acc);
            acc = _mm256_fmadd_pd(di, di, acc);
            _mm256_storeu_pd(out + s, acc);
        }
        for (std::size_t s = n4; s < n; ++s) {
            const double dr = re[s] - mre[r];
            const double di = im[s] - mim[r];
            out[s] += dr * dr + di * di;
        }
    }
}

// exp via range reduction x = n*ln2 + r and a rational minimax on r,
// e^r = 1 + 2*r*P(r^2) / (Q(r^2) - r*P(r^2)); 2^n applied through the
// exponent bits. Inputs below the double underflow threshold return 0.
__m256d exp4(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
    const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
    const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
    const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
    const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
    const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
    const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
    const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);

    // below -708 the 2^n exponent trick would leave the normal range, and
    // the true result is at most 3e-308 anyway: flush to zero
    const __m256d underflow = _mm256_set1_pd(-708.0);
    const __m256d overflow = _mm256_set1_pd(709.0);
    const __m256d dead = _mm256_cmp_pd(x, underflow, _CMP_LT_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, underflow), overflow);

    __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, c1, x);
    r = _mm256_fnmadd_pd(n, c2, r);
    const __m256d r2 = _mm256_mul_pd(r, r);

    __m256d px = _mm256_fmadd_pd(p0, r2, p1);
    px = _mm256_fmadd_pd(px, r2, p2);
    px = _mm256_mul_pd(px, r);
    __m256d qx = _mm256_fmadd_pd(q0, r2, q1);
    qx = _mm256_fmadd_pd(qx, r2, q2);
    qx = _mm256_fmadd_pd(qx, r2, q3);
    const __m256d er =
        _mm256_fmadd_pd(two, _mm256_div_pd(px, _mm256_sub_pd(qx, px)), one);

    const __m128i ni = _mm256_cvtpd_epi32(n);
    const __m256i ei = _mm256_slli_epi64(
        _mm256_add_epi64(_mm256_cvtepi32_epi64(ni), _mm256_set1_epi64x(1023)),
        52);
    const __m256d scale = _mm256_castsi256_pd(ei);
    return _mm256_andnot_pd(dead, _mm256_mul_pd(er, scale));
}

void vexp_avx2(double* x, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t s = 0; s < n4; s += 4)
        _mm256_storeu_pd(x + s, exp4(_mm256_loadu_pd(x + s)));
    for (std::size_t s = n4; s < n; ++s)
        x[s] = std::exp(x[s]);
}

} // namespace

const KernelOps kernels_avx2 = {sq_dist_avx2, vexp_avx2, "avx2"};

} // namespace macmi
