#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "macmi/kernels.hpp"
#include "macmi/rng.hpp"

using namespace macmi;

namespace {

// every variant that was compiled into this binary
std::vector<const KernelOps*> all_variants() {
    std::vector<const KernelOps*> v{&kernels_scalar};
#if defined(MACMI_HAVE_AVX2_TU)
    if (__builtin_cpu_supports("avx2"))
        v.push_back(&kernels_avx2);
#endif
#if defined(MACMI_HAVE_NEON_TU)
    v.push_back(&kernels_neon);
#endif
    if (&active_kernels() != v.front())
        v.push_back(&active_kernels()); // whatever dispatch chose
    return v;
}

} // namespace

TEST_CASE("dispatch selects a named kernel set") {
    const KernelOps& k = active_kernels();
    CHECK(k.name != nullptr);
    CHECK(std::strlen(k.name) > 0);
    CHECK(k.sq_dist != nullptr);
    CHECK(k.vexp != nullptr);
}

TEST_CASE("sq_dist matches the direct definition on all variants") {
    CounterRng rng(31, 0);
    for (std::size_t n : {1u, 3u, 4u, 7u, 16u, 33u, 257u}) {
        for (std::size_t nr : {1u, 2u, 4u}) {
            const std::size_t stride = n;
            std::vector<double> yre(nr * stride), yim(nr * stride), mre(nr),
                mim(nr);
            uint64_t c = 0;
            for (auto& v : yre)
                v = 4.0 * rng.u01(c++) - 2.0;
            for (auto& v : yim)
                v = 4.0 * rng.u01(c++) - 2.0;
            for (auto& v : mre)
                v = 4.0 * rng.u01(c++) - 2.0;
            for (auto& v : mim)
                v = 4.0 * rng.u01(c++) - 2.0;
            std::vector<double> want(n, 0.0);
            for (std::size_t r = 0; r < nr; ++r)
                for (std::size_t s = 0; s < n; ++s) {
                    double dr = yre[r * stride + s] - mre[r];
                    double di = yim[r * stride + s] - mim[r];
                    want[s] += dr * dr + di * di;
                }
            for (const KernelOps* k : all_variants()) {
                std::vector<double> got(n, -1.0);
                k->sq_dist(yre.data(), yim.data(), stride, mre.data(),
                           mim.data(), nr, n, got.data());
                for (std::size_t s = 0; s < n; ++s)
                    CHECK(std::abs(got[s] - want[s]) <=
                          1e-13 * (1.0 + want[s]));
            }
        }
    }
}

TEST_CASE("vexp matches std::exp over the live range on all variants") {
    std::vector<double> inputs;
    for (double x = -740.0; x <= 6.0; x += 0.37)
        inputs.push_back(x);
    inputs.insert(inputs.end(),
                  {-0.0, 0.0, 1.0, -1.0, -707.9, -708.1, -710.0, -750.0});
    for (const KernelOps* k : all_variants()) {
        std::vector<double> x = inputs;
        k->vexp(x.data(), x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double want = std::exp(inputs[i]);
            if (inputs[i] < -708.0) {
                // flushed to zero below the normal range: the true value is
                // < 3e-308 and irrelevant to any posterior weight
                CHECK(x[i] <= want);
                CHECK(x[i] >= 0.0);
            } else {
                CHECK(std::abs(x[i] - want) <= 5e-14 * want);
            }
        }
    }
}

TEST_CASE("variants agree with the scalar reference on a posterior-shaped workload") {
    // exponent vectors exactly like the hot loop produces: -|y - m|^2
    CounterRng rng(77, 1);
    const std::size_t n = 1003;
    std::vector<double> base(n);
    for (std::size_t s = 0; s < n; ++s)
        base[s] = -40.0 * rng.u01(s);
    for (const KernelOps* k : all_variants()) {
        std::vector<double> a = base, b = base;
        kernels_scalar.vexp(a.data(), n);
        k->vexp(b.data(), n);
        for (std::size_t s = 0; s < n; ++s)
            CHECK(std::abs(a[s] - b[s]) <= 1e-13 * a[s]);
    }
}
