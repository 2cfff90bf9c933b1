#pragma once

// Internal machinery shared by the posterior-statistics and the
// mutual-information estimators: precomputed joint-alphabet tables in a
// planar layout the SIMD kernels can walk, plus the fixed-chunk parallel
// driver that keeps reductions bit-identical for any worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "macmi/kernels.hpp"
#include "macmi/rng.hpp"
#include "macmi/system.hpp"

namespace macmi {
namespace detail {

constexpr int kChunk = 4096;

constexpr uint64_t kStreamSymbols1 = 0x73796d31; // same streams as synthesize
constexpr uint64_t kStreamSymbols2 = 0x73796d32;
constexpr uint64_t kStreamNoise = 0x6e6f6973;
constexpr uint64_t kStreamStrata = 0x73747261;

// joint-alphabet tables for one system; immutable once built
struct JointCtx {
    int n_r = 0, n_t = 0;
    int m = 0;  // number of joint pairs = m1*m2
    int m1 = 0, m2 = 0;
    double snr = 0;

    // sqrt(snr)-scaled mixture means, pair-major: mean_re[j*n_r + r]
    std::vector<double> mean_re, mean_im;
    std::vector<double> log_prior, prior; // per pair
    std::vector<int> i1, i2;              // pair -> per-user point index

    std::vector<double> pri1, pri2; // per-user priors
    Eigen::MatrixXcd x1, x2;        // n_t x m_k input points
    Eigen::MatrixXcd z1, z2;        // n_r x m_k, H_k P_k x_k (no sqrt(snr))
    Eigen::MatrixXcd zs1, zs2;      // n_r x m_k, sqrt(snr)-scaled
    std::vector<double> z1n, z2n;   // squared norms of z1/z2 columns

    explicit JointCtx(const MacSystem& sys) {
        n_r = sys.n_r();
        n_t = sys.n_t();
        snr = sys.snr;
        m1 = sys.c1.size();
        m2 = sys.c2.size();
        m = m1 * m2;
        const double rs = std::sqrt(snr);
        const Eigen::MatrixXcd a1 = sys.a1();
        const Eigen::MatrixXcd a2 = sys.a2();

        x1.resize(n_t, m1);
        z1.resize(n_r, m1);
        zs1.resize(n_r, m1);
        z1n.resize(m1);
        pri1 = sys.c1.probs;
        for (int k = 0; k < m1; ++k) {
            x1.col(k) = sys.c1.points[k];
            z1.col(k) = a1 * sys.c1.points[k];
            zs1.col(k) = rs * z1.col(k);
            z1n[k] = z1.col(k).squaredNorm();
        }
        x2.resize(n_t, m2);
        z2.resize(n_r, m2);
        zs2.resize(n_r, m2);
        z2n.resize(m2);
        pri2 = sys.c2.probs;
        for (int k = 0; k < m2; ++k) {
            x2.col(k) = sys.c2.points[k];
            z2.col(k) = a2 * sys.c2.points[k];
            zs2.col(k) = rs * z2.col(k);
            z2n[k] = z2.col(k).squaredNorm();
        }

        mean_re.resize(std::size_t(m) * n_r);
        mean_im.resize(std::size_t(m) * n_r);
        log_prior.resize(m);
        prior.resize(m);
        i1.resize(m);
        i2.resize(m);
        // lexicographic pair order: user 1 outer, user 2 inner
        for (int k1 = 0; k1 < m1; ++k1) {
            for (int k2 = 0; k2 < m2; ++k2) {
                const int j = k1 * m2 + k2;
                i1[j] = k1;
                i2[j] = k2;
                prior[j] = pri1[k1] * pri2[k2];
                log_prior[j] = std::log(prior[j]);
                for (int r = 0; r < n_r; ++r) {
                    const cplx mr = zs1(r, k1) + zs2(r, k2);
                    mean_re[std::size_t(j) * n_r + r] = mr.real();
                    mean_im[std::size_t(j) * n_r + r] = mr.imag();
                }
            }
        }
    }
};

// per-worker scratch buffers; `cap` is the evaluation capacity of one chunk
struct ChunkWs {
    int cap = 0;
    std::vector<double> y_re, y_im; // n_r x cap planar: y_re[r*cap + s]
    std::vector<double> w;          // m x cap: exponents, then weights
    std::vector<double> vmax, tot, lse; // per evaluation
    std::vector<double> wn1, wn2;   // m1 x cap / m2 x cap marginal weights

    void resize(const JointCtx& c, int capacity) {
        cap = capacity;
        y_re.resize(std::size_t(c.n_r) * cap);
        y_im.resize(std::size_t(c.n_r) * cap);
        w.resize(std::size_t(c.m) * cap);
        vmax.resize(cap);
        tot.resize(cap);
        lse.resize(cap);
        wn1.resize(std::size_t(c.m1) * cap);
        wn2.resize(std::size_t(c.m2) * cap);
    }
};

// Evaluates the joint posterior for the first `count` slots of ws.y:
// ws.w[j*cap+s] becomes the unnormalized weight prior_j*exp(-d_j+vmax),
// ws.tot the per-slot weight sum and ws.lse = log sum_j prior_j exp(-d_j)
// (so log p_y = lse - n_r*log(pi)). With `marginals`, per-user sums land
// in ws.wn1/ws.wn2 (same normalization as ws.w).
inline void posterior_pass(const JointCtx& c, ChunkWs& ws, int count,
                           bool marginals) {
    const KernelOps& k = active_kernels();
    const int cap = ws.cap;
    for (int j = 0; j < c.m; ++j)
        k.sq_dist(ws.y_re.data(), ws.y_im.data(), std::size_t(cap),
                  c.mean_re.data() + std::size_t(j) * c.n_r,
                  c.mean_im.data() + std::size_t(j) * c.n_r,
                  std::size_t(c.n_r), std::size_t(count),
                  ws.w.data() + std::size_t(j) * cap);

    std::fill(ws.vmax.begin(), ws.vmax.begin() + count,
              -std::numeric_limits<double>::infinity());
    for (int j = 0; j < c.m; ++j) {
        double* row = ws.w.data() + std::size_t(j) * cap;
        const double lp = c.log_prior[j];
        for (int s = 0; s < count; ++s) {
            row[s] = lp - row[s];
            ws.vmax[s] = std::max(ws.vmax[s], row[s]);
        }
    }
    for (int j = 0; j < c.m; ++j) {
        double* row = ws.w.data() + std::size_t(j) * cap;
        for (int s = 0; s < count; ++s)
            row[s] -= ws.vmax[s];
        k.vexp(row, std::size_t(count));
    }
    std::fill(ws.tot.begin(), ws.tot.begin() + count, 0.0);
    for (int j = 0; j < c.m; ++j) {
        const double* row = ws.w.data() + std::size_t(j) * cap;
        for (int s = 0; s < count; ++s)
            ws.tot[s] += row[s];
    }
    for (int s = 0; s < count; ++s)
        ws.lse[s] = std::log(ws.tot[s]) + ws.vmax[s];

    if (marginals) {
        std::fill(ws.wn1.begin(), ws.wn1.begin() + std::size_t(c.m1) * cap, 0.0);
        std::fill(ws.wn2.begin(), ws.wn2.begin() + std::size_t(c.m2) * cap, 0.0);
        for (int j = 0; j < c.m; ++j) {
            const double* row = ws.w.data() + std::size_t(j) * cap;
            double* r1 = ws.wn1.data() + std::size_t(c.i1[j]) * cap;
            double* r2 = ws.wn2.data() + std::size_t(c.i2[j]) * cap;
            for (int s = 0; s < count; ++s) {
                r1[s] += row[s];
                r2[s] += row[s];
            }
        }
    }
}

// Draws the (x1, x2, noise) stream for global sample indices
// [start, start+count) -- identical to `synthesize` -- and writes
// y = mean + noise into slot s; with `antithetic`, y = mean - noise goes
// into slot count+s. Per-index squared noise norms land in nsq.
inline void fill_joint_samples(const JointCtx& c, uint64_t seed,
                               uint64_t start, int count, bool antithetic,
                               ChunkWs& ws, int* u1, int* u2, double* nsq) {
    const CounterRng rs1(seed, kStreamSymbols1);
    const CounterRng rs2(seed, kStreamSymbols2);
    const CounterRng rn(seed, kStreamNoise);
    const double sd = std::sqrt(0.5);
    const int cap = ws.cap;
    for (int s = 0; s < count; ++s) {
        const uint64_t idx = start + s;
        const int k1 = int(rs1.index(idx, c.m1));
        const int k2 = int(rs2.index(idx, c.m2));
        u1[s] = k1;
        u2[s] = k2;
        double acc = 0;
        for (int r = 0; r < c.n_r; ++r) {
            double a, b;
            rn.normal_pair(idx * c.n_r + r, a, b);
            const double nre = sd * a, nim = sd * b;
            acc += nre * nre + nim * nim;
            const cplx mr = c.zs1(r, k1) + c.zs2(r, k2);
            ws.y_re[std::size_t(r) * cap + s] = mr.real() + nre;
            ws.y_im[std::size_t(r) * cap + s] = mr.imag() + nim;
            if (antithetic) {
                ws.y_re[std::size_t(r) * cap + count + s] = mr.real() - nre;
                ws.y_im[std::size_t(r) * cap + count + s] = mr.imag() - nim;
            }
        }
        nsq[s] = acc;
    }
}

// Fixed-size chunks claimed off an atomic counter; partial results are
// stored per chunk and reduced in chunk order by the caller, so the sum
// is bit-identical no matter how many workers ran. `make()` builds one
// worker-local evaluator fn(start, count, partial&).
template <class Partial, class Factory>
std::vector<Partial> run_chunks(uint64_t n, int workers, Factory&& make) {
    const uint64_t n_chunks = (n + kChunk - 1) / kChunk;
    std::vector<Partial> parts(n_chunks);
    std::atomic<uint64_t> next{0};
    auto work = [&]() {
        auto fn = make();
        for (;;) {
            const uint64_t chunk = next.fetch_add(1);
            if (chunk >= n_chunks)
                break;
            const uint64_t start = chunk * kChunk;
            const int count = int(std::min<uint64_t>(kChunk, n - start));
            fn(start, count, parts[chunk]);
        }
    };
    int w = workers > 0 ? workers
                        : int(std::thread::hardware_concurrency());
    w = std::max(1, std::min<int>(w, int(std::min<uint64_t>(n_chunks, 64))));
    if (w == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(w);
        for (int i = 0; i < w; ++i)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }
    return parts;
}

} // namespace detail
} // namespace macmi
