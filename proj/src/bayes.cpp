#include "macmi/bayes.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "joint_ctx.hpp"

namespace macmi {

double log_likelihood(const MacSystem& sys, const Eigen::VectorXcd& y,
                      const Eigen::VectorXcd& x1, const Eigen::VectorXcd& x2) {
    const double rs = std::sqrt(sys.snr);
    const Eigen::VectorXcd mean = rs * (sys.a1() * x1) + rs * (sys.a2() * x2);
    return -sys.n_r() * std::log(M_PI) - (y - mean).squaredNorm();
}

PosteriorAtY posterior(const MacSystem& sys, const Eigen::VectorXcd& y) {
    const detail::JointCtx c(sys);
    std::vector<double> w(c.m);
    double vmax = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < c.m; ++j) {
        double d = 0;
        for (int r = 0; r < c.n_r; ++r) {
            const double dr = y(r).real() - c.mean_re[std::size_t(j) * c.n_r + r];
            const double di = y(r).imag() - c.mean_im[std::size_t(j) * c.n_r + r];
            d += dr * dr + di * di;
        }
        w[j] = c.log_prior[j] - d;
        vmax = std::max(vmax, w[j]);
    }
    double tot = 0;
    for (int j = 0; j < c.m; ++j) {
        w[j] = std::exp(w[j] - vmax);
        tot += w[j];
    }
    PosteriorAtY out;
    out.y = y;
    out.log_py = std::log(tot) + vmax - c.n_r * std::log(M_PI);
    out.xhat1 = Eigen::VectorXcd::Zero(c.n_t);
    out.xhat2 = Eigen::VectorXcd::Zero(c.n_t);
    out.posterior_weights.resize(c.m);
    for (int j = 0; j < c.m; ++j) {
        const double wj = w[j] / tot;
        out.posterior_weights[j] = wj;
        out.xhat1 += wj * c.x1.col(c.i1[j]);
        out.xhat2 += wj * c.x2.col(c.i2[j]);
    }
    return out;
}

namespace {

struct StatsPartial {
    Eigen::MatrixXcd e1, e2, c12;
    double s_m1 = 0, ss_m1 = 0;
    double s_m2 = 0, ss_m2 = 0;
    double ss_mt = 0;
    double s_psi = 0, ss_psi = 0;
    cplx s_psi_paper{0, 0};
    uint64_t cnt = 0;
};

} // namespace

PosteriorStats posterior_stats(const MacSystem& sys, uint64_t seed,
                               uint64_t n_samples, int workers) {
    if (n_samples < 1)
        throw std::invalid_argument("posterior_stats: n_samples must be >= 1");
    const detail::JointCtx c(sys);

    auto make_worker = [&]() {
        auto ws = std::make_shared<detail::ChunkWs>();
        ws->resize(c, detail::kChunk);
        return [&c, seed, ws](uint64_t start, int count, StatsPartial& p) {
            detail::ChunkWs& w = *ws;
            std::vector<int> u1(count), u2(count);
            std::vector<double> nsq(count);
            detail::fill_joint_samples(c, seed, start, count, false, w,
                                       u1.data(), u2.data(), nsq.data());
            detail::posterior_pass(c, w, count, true);

            p.e1 = Eigen::MatrixXcd::Zero(c.n_t, c.n_t);
            p.e2 = Eigen::MatrixXcd::Zero(c.n_t, c.n_t);
            p.c12 = Eigen::MatrixXcd::Zero(c.n_t, c.n_t);
            Eigen::VectorXd sw1 = Eigen::VectorXd::Zero(c.m1);
            Eigen::VectorXd sw2 = Eigen::VectorXd::Zero(c.m2);
            Eigen::MatrixXcd oh1 = Eigen::MatrixXcd::Zero(c.n_t, c.n_t);
            Eigen::MatrixXcd oh2 = Eigen::MatrixXcd::Zero(c.n_t, c.n_t);
            Eigen::VectorXcd xh1(c.n_t), xh2(c.n_t), zh1(c.n_r), zh2(c.n_r);
            const int cap = w.cap;
            for (int s = 0; s < count; ++s) {
                const double inv = 1.0 / w.tot[s];
                xh1.setZero();
                zh1.setZero();
                double z1sq = 0;
                for (int k = 0; k < c.m1; ++k) {
                    const double wk = w.wn1[std::size_t(k) * cap + s] * inv;
                    sw1(k) += wk;
                    xh1 += wk * c.x1.col(k);
                    zh1 += wk * c.z1.col(k);
                    z1sq += wk * c.z1n[k];
                }
                xh2.setZero();
                zh2.setZero();
                double z2sq = 0;
                for (int k = 0; k < c.m2; ++k) {
                    const double wk = w.wn2[std::size_t(k) * cap + s] * inv;
                    sw2(k) += wk;
                    xh2 += wk * c.x2.col(k);
                    zh2 += wk * c.z2.col(k);
                    z2sq += wk * c.z2n[k];
                }
                oh1.noalias() += xh1 * xh1.adjoint();
                oh2.noalias() += xh2 * xh2.adjoint();
                p.c12.noalias() += xh1 * xh2.adjoint();

                const double m1s = z1sq - zh1.squaredNorm();
                const double m2s = z2sq - zh2.squaredNorm();
                const cplx t = zh2.dot(zh1); // zhat2^dag zhat1
                const double psi = -2.0 * t.real();
                p.s_m1 += m1s;
                p.ss_m1 += m1s * m1s;
                p.s_m2 += m2s;
                p.ss_m2 += m2s * m2s;
                p.ss_mt += (m1s + m2s) * (m1s + m2s);
                p.s_psi += psi;
                p.ss_psi += psi * psi;
                p.s_psi_paper += t - std::conj(t);
            }
            p.e1 = c.x1 * sw1.asDiagonal() * c.x1.adjoint() - oh1;
            p.e2 = c.x2 * sw2.asDiagonal() * c.x2.adjoint() - oh2;
            p.cnt = uint64_t(count);
        };
    };

    const auto parts =
        detail::run_chunks<StatsPartial>(n_samples, workers, make_worker);

    StatsPartial tot;
    tot.e1 = Eigen::MatrixXcd::Zero(c.n_t, c.n_t);
    tot.e2 = Eigen::MatrixXcd::Zero(c.n_t, c.n_t);
    tot.c12 = Eigen::MatrixXcd::Zero(c.n_t, c.n_t);
    for (const StatsPartial& p : parts) {
        tot.e1 += p.e1;
        tot.e2 += p.e2;
        tot.c12 += p.c12;
        tot.s_m1 += p.s_m1;
        tot.ss_m1 += p.ss_m1;
        tot.s_m2 += p.s_m2;
        tot.ss_m2 += p.ss_m2;
        tot.ss_mt += p.ss_mt;
        tot.s_psi += p.s_psi;
        tot.ss_psi += p.ss_psi;
        tot.s_psi_paper += p.s_psi_paper;
        tot.cnt += p.cnt;
    }
    const double n = double(tot.cnt);
    auto se = [n](double sum, double sumsq) {
        const double var = std::max(0.0, sumsq / n - (sum / n) * (sum / n));
        return std::sqrt(var / n);
    };

    PosteriorStats st;
    st.e1 = tot.e1 / n;
    st.e2 = tot.e2 / n;
    st.cross12 = tot.c12 / n;
    st.cross21 = st.cross12.adjoint();
    st.mmse1 = tot.s_m1 / n;
    st.mmse2 = tot.s_m2 / n;
    st.mmse_total = (tot.s_m1 + tot.s_m2) / n;
    st.psi_oracle = tot.s_psi / n;
    st.psi_paper = tot.s_psi_paper / n;
    st.se_mmse1 = se(tot.s_m1, tot.ss_m1);
    st.se_mmse2 = se(tot.s_m2, tot.ss_m2);
    st.se_mmse_total = se(tot.s_m1 + tot.s_m2, tot.ss_mt);
    st.se_psi_oracle = se(tot.s_psi, tot.ss_psi);
    st.mi = std::numeric_limits<double>::quiet_NaN();
    st.sample_count = tot.cnt;
    st.seed = seed;
    return st;
}

ScoreIdentityReport score_identity_report(const MacSystem& sys,
                                          const Eigen::VectorXcd& y) {
    const PosteriorAtY post = posterior(sys, y);
    const detail::JointCtx c(sys);
    // closed-form mixture score: grad_y p / p = -(y - sum_j w_j mean_j)
    Eigen::VectorXcd wmean = Eigen::VectorXcd::Zero(c.n_r);
    for (int j = 0; j < c.m; ++j) {
        Eigen::VectorXcd mj(c.n_r);
        for (int r = 0; r < c.n_r; ++r)
            mj(r) = cplx(c.mean_re[std::size_t(j) * c.n_r + r],
                         c.mean_im[std::size_t(j) * c.n_r + r]);
        wmean += post.posterior_weights[j] * mj;
    }
    const Eigen::VectorXcd rhs = y + (wmean - y); // y + score
    const double rs = std::sqrt(sys.snr);
    const Eigen::VectorXcd lhs =
        rs * (sys.a1() * post.xhat1) + rs * (sys.a2() * post.xhat2);
    const Eigen::VectorXcd lhs_unscaled =
        sys.a1() * post.xhat1 + sys.a2() * post.xhat2;
    ScoreIdentityReport rep;
    rep.residual = (lhs - rhs).norm();
    rep.residual_unscaled = (lhs_unscaled - rhs).norm();
    return rep;
}

double score_identity_residual(const MacSystem& sys,
                               const Eigen::VectorXcd& y) {
    return score_identity_report(sys, y).residual;
}

WienerEstimates wiener_estimates(const MacSystem& sys,
                                 const Eigen::VectorXcd& y) {
    const double rs = std::sqrt(sys.snr);
    const Eigen::MatrixXcd g1 = rs * sys.a1(); // H_k * (sqrt(snr) P_k)
    const Eigen::MatrixXcd g2 = rs * sys.a2();
    Eigen::MatrixXcd cy =
        Eigen::MatrixXcd::Identity(sys.n_r(), sys.n_r());
    cy.noalias() += g1 * g1.adjoint();
    cy.noalias() += g2 * g2.adjoint();
    const Eigen::VectorXcd cyi_y = cy.ldlt().solve(y);
    WienerEstimates est;
    est.xhat1 = g1.adjoint() * cyi_y;
    est.xhat2 = g2.adjoint() * cyi_y;
    return est;
}

} // namespace macmi
