#include "macmi/grad.hpp"

#include <cmath>
#include <stdexcept>

#include "macmi/bayes.hpp"
#include "macmi/info.hpp"
#include "macmi/quadrature.hpp"

namespace macmi {

namespace {

void check_user(int user) {
    if (user != 1 && user != 2)
        throw std::invalid_argument("grad: user must be 1 or 2");
}

PosteriorStats stats_for(const MacSystem& sys, uint64_t seed,
                         uint64_t n_samples, int workers) {
    if (sys.scalar())
        return posterior_stats_quad(sys);
    return posterior_stats(sys, seed, n_samples, workers);
}

} // namespace

Eigen::MatrixXcd grad_h_from_stats(const MacSystem& sys, int user,
                                   const PosteriorStats& st) {
    check_user(user);
    if (user == 1)
        return sys.snr * (sys.h1 * sys.p1 * st.e1 * sys.p1.adjoint() -
                          sys.h2 * sys.p2 * st.cross21 * sys.p1.adjoint());
    return sys.snr * (sys.h2 * sys.p2 * st.e2 * sys.p2.adjoint() -
                      sys.h1 * sys.p1 * st.cross12 * sys.p2.adjoint());
}

Eigen::MatrixXcd grad_p_from_stats(const MacSystem& sys, int user,
                                   const PosteriorStats& st) {
    check_user(user);
    if (user == 1)
        return sys.snr * (sys.h1.adjoint() * sys.h1 * sys.p1 * st.e1 -
                          sys.h1.adjoint() * sys.h2 * sys.p2 * st.cross21);
    return sys.snr * (sys.h2.adjoint() * sys.h2 * sys.p2 * st.e2 -
                      sys.h2.adjoint() * sys.h1 * sys.p1 * st.cross12);
}

Eigen::MatrixXcd grad_h(const MacSystem& sys, int user, uint64_t seed,
                        uint64_t n_samples, int workers) {
    return grad_h_from_stats(sys, user,
                             stats_for(sys, seed, n_samples, workers));
}

Eigen::MatrixXcd grad_p(const MacSystem& sys, int user, uint64_t seed,
                        uint64_t n_samples, int workers) {
    return grad_p_from_stats(sys, user,
                             stats_for(sys, seed, n_samples, workers));
}

Eigen::MatrixXcd grad_p_treat_as_noise(const MacSystem& sys, int grad_wrt,
                                       uint64_t seed, uint64_t n_samples,
                                       int workers) {
    check_user(grad_wrt);
    const int decoded = grad_wrt == 1 ? 2 : 1;
    const Eigen::MatrixXcd& hj = grad_wrt == 1 ? sys.h1 : sys.h2;
    const Eigen::MatrixXcd& pj = grad_wrt == 1 ? sys.p1 : sys.p2;
    const Eigen::MatrixXcd& hk = decoded == 1 ? sys.h1 : sys.h2;
    const Eigen::MatrixXcd& pk = decoded == 1 ? sys.p1 : sys.p2;
    const int nr = sys.n_r(), nt = sys.n_t();

    const Eigen::MatrixXcd aj = hj * pj;
    Eigen::MatrixXcd sig = Eigen::MatrixXcd::Identity(nr, nr);
    sig.noalias() += sys.snr * aj * aj.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sig);
    const Eigen::MatrixXcd white = es.operatorInverseSqrt();

    // decoded user's error matrix in the whitened model
    MacSystem eq;
    eq.h1 = std::sqrt(sys.snr) * white * (hk * pk);
    eq.p1 = Eigen::MatrixXcd::Identity(nt, nt);
    eq.h2 = Eigen::MatrixXcd::Zero(nr, nt);
    eq.p2 = Eigen::MatrixXcd::Zero(nt, nt);
    eq.snr = 1.0;
    eq.c1 = decoded == 1 ? sys.c1 : sys.c2;
    eq.c2 = decoded == 1 ? sys.c2 : sys.c1;
    const Eigen::MatrixXcd ek =
        stats_for(eq, seed, n_samples, workers).e1;

    const Eigen::MatrixXcd sig_inv = white * white;
    return -(sys.snr * sys.snr) * hj.adjoint() * sig_inv * hk * pk * ek *
           pk.adjoint() * hk.adjoint() * sig_inv * hj * pj;
}

Eigen::MatrixXcd grad_conditional(const MacSystem& sys, int user,
                                  uint64_t seed, uint64_t n_samples,
                                  int workers) {
    check_user(user);
    return grad_p(sys, user, seed, n_samples, workers) -
           grad_p_treat_as_noise(sys, user, seed, n_samples, workers);
}

Eigen::MatrixXcd fd_gradient(const MacSystem& sys, WrtMatrix wrt, double step,
                             const std::function<double(const MacSystem&)>& fn) {
    auto select = [wrt](MacSystem& s) -> Eigen::MatrixXcd& {
        switch (wrt) {
        case WrtMatrix::h1: return s.h1;
        case WrtMatrix::h2: return s.h2;
        case WrtMatrix::p1: return s.p1;
        default: return s.p2;
        }
    };
    MacSystem work = sys;
    Eigen::MatrixXcd& m = select(work);
    const double eps = step > 0 ? step : 1e-3 * (1.0 + m.norm());
    Eigen::MatrixXcd grad(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            const cplx orig = m(i, j);
            m(i, j) = orig + eps;
            const double fre_p = fn(work);
            m(i, j) = orig - eps;
            const double fre_m = fn(work);
            m(i, j) = orig + cplx(0, eps);
            const double fim_p = fn(work);
            m(i, j) = orig - cplx(0, eps);
            const double fim_m = fn(work);
            m(i, j) = orig;
            const double dre = (fre_p - fre_m) / (2 * eps);
            const double dim = (fim_p - fim_m) / (2 * eps);
            grad(i, j) = cplx(dre / 2, dim / 2);
        }
    }
    return grad;
}

Eigen::MatrixXcd fd_gradient_oracle(const MacSystem& sys, WrtMatrix wrt,
                                    double step, uint64_t seed,
                                    uint64_t n_samples, int workers) {
    return fd_gradient(sys, wrt, step,
                       [seed, n_samples, workers](const MacSystem& s) {
                           return mutual_information_nats(s, seed, n_samples,
                                                          workers)
                               .value;
                       });
}

GradientReport gradient_report(const Eigen::MatrixXcd& analytic,
                               const Eigen::MatrixXcd& numeric) {
    GradientReport rep;
    rep.analytic = analytic;
    rep.numeric = numeric;
    rep.rel_error =
        (analytic - numeric).norm() / std::max(numeric.norm(), 1e-12);
    const double denom = analytic.squaredNorm();
    rep.convention_scale =
        denom > 0 ? (analytic.adjoint() * numeric).trace().real() / denom
                  : 1.0;
    return rep;
}

} // namespace macmi
