#include "macmi/info.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "joint_ctx.hpp"
#include "macmi/bayes.hpp"
#include "macmi/quadrature.hpp"
#include "macmi/rng.hpp"

namespace macmi {
namespace {

constexpr double kLog2 = 0.69314718055994530941723212145818;

// which information density the general engine accumulates
enum class MiMode {
    joint,       // -||n||^2 - log(p_y pi^nr)
    cond_given1, // I(x2;y|x1)
    cond_given2, // I(x1;y|x2)
    marg1,       // I(x1;y), interferer marginalized exactly
    marg2,       // I(x2;y)
};

struct MeanVarPartial {
    double s = 0, ss = 0;   // value
    double sc = 0, scc = 0; // control variate
    double svc = 0;         // cross moment
    uint64_t cnt = 0;
};

McEstimate reduce_mean_var(const std::vector<MeanVarPartial>& parts,
                           uint64_t seed, bool control) {
    MeanVarPartial t;
    for (const MeanVarPartial& p : parts) {
        t.s += p.s;
        t.ss += p.ss;
        t.sc += p.sc;
        t.scc += p.scc;
        t.svc += p.svc;
        t.cnt += p.cnt;
    }
    const double n = double(t.cnt);
    const double mv = t.s / n;
    const double mc = t.sc / n;
    const double var_v = std::max(0.0, t.ss / n - mv * mv);
    const double var_c = std::max(0.0, t.scc / n - mc * mc);
    const double cov = t.svc / n - mv * mc;
    double beta = 0, explained = 0;
    if (control && var_c > 1e-300) {
        beta = cov / var_c;
        explained = cov * cov / var_c;
    }
    McEstimate est;
    est.value = mv - beta * mc;
    est.std_error = std::sqrt(std::max(0.0, var_v - explained) / n);
    est.n_samples = t.cnt;
    est.seed = seed;
    return est;
}

// Joint sampling with an antithetic noise flip and a regression control
// variate on ||n||^2 - n_r. Works for any dimensions and alphabet sizes.
McEstimate mi_general_nats(const MacSystem& sys, MiMode mode, uint64_t seed,
                           uint64_t n, int workers) {
    const detail::JointCtx c(sys);
    auto make_worker = [&c, mode, seed]() {
        auto ws = std::make_shared<detail::ChunkWs>();
        ws->resize(c, 2 * detail::kChunk);
        return [&c, mode, seed, ws](uint64_t start, int count,
                                    MeanVarPartial& p) {
            detail::ChunkWs& w = *ws;
            std::vector<int> u1(count), u2(count);
            std::vector<double> nsq(count);
            detail::fill_joint_samples(c, seed, start, count, true, w,
                                       u1.data(), u2.data(), nsq.data());
            detail::posterior_pass(c, w, 2 * count, false);
            const int cap = w.cap;
            // log of a per-user conditional likelihood: sum the joint
            // weights consistent with the transmitted point of that user
            auto lse_given1 = [&](int slot, int t) {
                double sum = 0;
                for (int k2 = 0; k2 < c.m2; ++k2)
                    sum += w.w[std::size_t(t * c.m2 + k2) * cap + slot];
                return std::log(sum / c.pri1[t]) + w.vmax[slot];
            };
            auto lse_given2 = [&](int slot, int t) {
                double sum = 0;
                for (int k1 = 0; k1 < c.m1; ++k1)
                    sum += w.w[std::size_t(k1 * c.m2 + t) * cap + slot];
                return std::log(sum / c.pri2[t]) + w.vmax[slot];
            };
            for (int s = 0; s < count; ++s) {
                double v = 0;
                for (int half = 0; half < 2; ++half) {
                    const int slot = half == 0 ? s : count + s;
                    double val = 0;
                    switch (mode) {
                    case MiMode::joint:
                        val = -nsq[s] - w.lse[slot];
                        break;
                    case MiMode::cond_given1:
                        val = -nsq[s] - lse_given1(slot, u1[s]);
                        break;
                    case MiMode::cond_given2:
                        val = -nsq[s] - lse_given2(slot, u2[s]);
                        break;
                    case MiMode::marg1:
                        val = lse_given1(slot, u1[s]) - w.lse[slot];
                        break;
                    case MiMode::marg2:
                        val = lse_given2(slot, u2[s]) - w.lse[slot];
                        break;
                    }
                    v += 0.5 * val;
                }
                const double ctrl = nsq[s] - c.n_r;
                p.s += v;
                p.ss += v * v;
                p.sc += ctrl;
                p.scc += ctrl * ctrl;
                p.svc += v * ctrl;
            }
            p.cnt += uint64_t(count);
        };
    };
    const auto parts =
        detail::run_chunks<MeanVarPartial>(n, workers, make_worker);
    return reduce_mean_var(parts, seed, true);
}

// Scalar-system path: the transmitted pair is averaged exactly per noise
// draw, the noise flip is applied analytically, and the real noise axis is
// drawn by systematic stratification under a widened Gaussian proposal
// (importance-weighted back). This is what gives the finite-difference
// identity checks their accuracy at a fixed sample budget.
McEstimate mi_scalar_nats(const MacSystem& sys, uint64_t seed, uint64_t n,
                          int workers) {
    const detail::JointCtx c(sys);
    auto make_worker = [&c, seed, n]() {
        return [&c, seed, n](uint64_t start, int count, MeanVarPartial& p) {
            const CounterRng ru(seed, detail::kStreamStrata);
            const CounterRng rn(seed, detail::kStreamNoise);
            const boost::math::normal_distribution<double> gauss(0.0, 1.0);
            const double sigma = std::sqrt(0.5);
            const double kappa = 2.0;
            std::vector<double> ex(c.m);
            for (int s = 0; s < count; ++s) {
                const uint64_t idx = start + s;
                // stratum idx of n, jittered inside, mapped through the
                // proposal quantile: one exact systematic sample of N(0,
                // (kappa*sigma)^2) on the real axis
                const double q = (double(idx) + ru.u01(idx)) / double(n);
                const double x =
                    kappa * sigma * boost::math::quantile(gauss, q);
                const double wis =
                    kappa * std::exp(-(x * x) / (2 * sigma * sigma) *
                                     (1.0 - 1.0 / (kappa * kappa)));
                double a, b;
                rn.normal_pair(idx, a, b);
                const double nim = sigma * a;
                const double nsq = x * x + nim * nim;
                double g = 0;
                for (int j0 = 0; j0 < c.m; ++j0) {
                    for (int sign = 0; sign < 2; ++sign) {
                        const double sg = sign ? -1.0 : 1.0;
                        const double yre = c.mean_re[j0] + sg * x;
                        const double yim = c.mean_im[j0] + sg * nim;
                        double vmax =
                            -std::numeric_limits<double>::infinity();
                        for (int j = 0; j < c.m; ++j) {
                            const double dr = yre - c.mean_re[j];
                            const double di = yim - c.mean_im[j];
                            ex[j] = c.log_prior[j] - dr * dr - di * di;
                            vmax = std::max(vmax, ex[j]);
                        }
                        double tot = 0;
                        for (int j = 0; j < c.m; ++j)
                            tot += std::exp(ex[j] - vmax);
                        const double lse = std::log(tot) + vmax;
                        g += c.prior[j0] * 0.5 * (-nsq - lse);
                    }
                }
                const double v = wis * g;
                p.s += v;
                p.ss += v * v;
            }
            p.cnt += uint64_t(count);
        };
    };
    const auto parts =
        detail::run_chunks<MeanVarPartial>(n, workers, make_worker);
    return reduce_mean_var(parts, seed, false);
}

McEstimate to_bits(McEstimate est) {
    est.value /= kLog2;
    est.std_error /= kLog2;
    return est;
}

void check_args(uint64_t n_samples, int user) {
    if (n_samples < 1)
        throw std::invalid_argument("estimator: n_samples must be >= 1");
    if (user != 1 && user != 2)
        throw std::invalid_argument("estimator: user must be 1 or 2");
}

} // namespace

McEstimate mutual_information_nats(const MacSystem& sys, uint64_t seed,
                                   uint64_t n_samples, int workers) {
    check_args(n_samples, 1);
    if (sys.scalar() && sys.c1.size() * sys.c2.size() <= 64)
        return mi_scalar_nats(sys, seed, n_samples, workers);
    return mi_general_nats(sys, MiMode::joint, seed, n_samples, workers);
}

McEstimate mutual_information(const MacSystem& sys, uint64_t seed,
                              uint64_t n_samples, int workers) {
    return to_bits(mutual_information_nats(sys, seed, n_samples, workers));
}

McEstimate mi_treat_as_noise(const MacSystem& sys, int decode_user,
                             uint64_t seed, uint64_t n_samples, int workers) {
    check_args(n_samples, decode_user);
    const Eigen::MatrixXcd ak = decode_user == 1 ? sys.a1() : sys.a2();
    const Eigen::MatrixXcd aj = decode_user == 1 ? sys.a2() : sys.a1();
    const int nr = sys.n_r(), nt = sys.n_t();
    // interferer-as-Gaussian covariance, whitened away into the channel
    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Identity(nr, nr);
    cov.noalias() += sys.snr * aj * aj.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cov);
    const Eigen::MatrixXcd white = es.operatorInverseSqrt();
    MacSystem eq;
    eq.h1 = std::sqrt(sys.snr) * white * ak;
    eq.p1 = Eigen::MatrixXcd::Identity(nt, nt);
    eq.h2 = Eigen::MatrixXcd::Zero(nr, nt);
    eq.p2 = Eigen::MatrixXcd::Zero(nt, nt);
    eq.snr = 1.0;
    eq.c1 = decode_user == 1 ? sys.c1 : sys.c2;
    eq.c2 = decode_user == 1 ? sys.c2 : sys.c1;
    return mutual_information(eq, seed, n_samples, workers);
}

McEstimate conditional_mi(const MacSystem& sys, int given_user, uint64_t seed,
                          uint64_t n_samples, int workers) {
    check_args(n_samples, given_user);
    const MiMode mode =
        given_user == 1 ? MiMode::cond_given1 : MiMode::cond_given2;
    return to_bits(mi_general_nats(sys, mode, seed, n_samples, workers));
}

McEstimate marginal_mi(const MacSystem& sys, int decode_user, uint64_t seed,
                       uint64_t n_samples, int workers) {
    check_args(n_samples, decode_user);
    const MiMode mode = decode_user == 1 ? MiMode::marg1 : MiMode::marg2;
    return to_bits(mi_general_nats(sys, mode, seed, n_samples, workers));
}

ImmseReport immse_identity_check(const MacSystem& sys_template,
                                 const std::vector<double>& snr_grid,
                                 double fd_step, uint64_t seed,
                                 uint64_t n_samples, int workers) {
    if (snr_grid.empty())
        throw std::invalid_argument("immse_identity_check: empty snr grid");
    ImmseReport rep;
    rep.snr_grid = snr_grid;
    for (double snr : snr_grid) {
        if (!(snr > 0))
            throw std::invalid_argument(
                "immse_identity_check: snr grid must be positive");
        double step = fd_step > 0 ? fd_step : std::min(0.05 * snr, 0.1);
        if (step >= snr)
            step = 0.5 * snr;
        MacSystem at = sys_template;
        at.snr = snr;
        MacSystem lo = sys_template;
        lo.snr = snr - step;
        MacSystem hi = sys_template;
        hi.snr = snr + step;
        // common random numbers: every evaluation reuses the same seed, so
        // the sampling error nearly cancels in the difference
        const McEstimate ilo =
            mutual_information_nats(lo, seed, n_samples, workers);
        const McEstimate ihi =
            mutual_information_nats(hi, seed, n_samples, workers);
        const McEstimate ic =
            mutual_information_nats(at, seed, n_samples, workers);
        const double fd = (ihi.value - ilo.value) / (2.0 * step);
        const PosteriorStats st =
            at.scalar() ? posterior_stats_quad(at)
                        : posterior_stats(at, seed, n_samples, workers);
        const double rhs = st.mmse_total + st.psi_oracle;
        rep.i_values.push_back(ic);
        rep.di_dsnr_fd.push_back(fd);
        rep.mmse_plus_psi.push_back(rhs);
        rep.rel_errors.push_back(std::abs(fd - rhs) /
                                 std::max(std::abs(fd), 1e-300));
    }
    rep.max_rel_error = 0;
    for (double e : rep.rel_errors)
        rep.max_rel_error = std::max(rep.max_rel_error, e);
    return rep;
}

LowSnrExpansion low_snr_expansion(const MacSystem& sys) {
    const Eigen::MatrixXcd a = sys.a1();
    const Eigen::MatrixXcd b = sys.a2();
    const Eigen::MatrixXcd aa = a * a.adjoint();
    const Eigen::MatrixXcd bb = b * b.adjoint();
    LowSnrExpansion ex;
    ex.first_order = aa.trace().real() + bb.trace().real();
    ex.second_order = -(aa * aa).trace().real() - (bb * bb).trace().real() +
                      (aa * bb).trace().real() - (bb * aa).trace().real();
    return ex;
}

double gaussian_mi_nats(const MacSystem& sys) {
    const double rs = std::sqrt(sys.snr);
    const int nr = sys.n_r();
    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Identity(nr, nr);
    const Eigen::MatrixXcd g1 = rs * sys.a1();
    const Eigen::MatrixXcd g2 = rs * sys.a2();
    cov.noalias() += g1 * g1.adjoint();
    cov.noalias() += g2 * g2.adjoint();
    const Eigen::LLT<Eigen::MatrixXcd> llt(cov);
    double logdet = 0;
    for (int i = 0; i < nr; ++i)
        logdet += 2.0 * std::log(llt.matrixLLT()(i, i).real());
    return logdet;
}

PosteriorStats gaussian_stats(const MacSystem& sys) {
    const int nt = sys.n_t();
    const double rs = std::sqrt(sys.snr);
    const Eigen::MatrixXcd a1 = sys.a1();
    const Eigen::MatrixXcd a2 = sys.a2();
    Eigen::MatrixXcd g(sys.n_r(), 2 * nt);
    g.leftCols(nt) = rs * a1;
    g.rightCols(nt) = rs * a2;
    // error covariance of the stacked input [x1; x2]
    const Eigen::MatrixXcd ej =
        (Eigen::MatrixXcd::Identity(2 * nt, 2 * nt) + g.adjoint() * g)
            .ldlt()
            .solve(Eigen::MatrixXcd::Identity(2 * nt, 2 * nt));
    PosteriorStats st;
    st.e1 = ej.block(0, 0, nt, nt);
    st.e2 = ej.block(nt, nt, nt, nt);
    st.cross12 = -ej.block(0, nt, nt, nt); // E[xh1 xh2^dag] = -joint block
    st.cross21 = st.cross12.adjoint();
    st.mmse1 = (a1 * st.e1 * a1.adjoint()).trace().real();
    st.mmse2 = (a2 * st.e2 * a2.adjoint()).trace().real();
    st.mmse_total = st.mmse1 + st.mmse2;
    const cplx t = (a1 * st.cross12 * a2.adjoint()).trace();
    st.psi_oracle = -2.0 * t.real();
    st.psi_paper = t - std::conj(t);
    st.mi = gaussian_mi_nats(sys);
    return st;
}

} // namespace macmi
