#include "macmi/quadrature.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace macmi {

HermiteRule gauss_hermite(int n) {
    if (n < 2)
        throw std::invalid_argument("gauss_hermite: need n >= 2");
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt(k / 2.0);
        j(k, k - 1) = b;
        j(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    HermiteRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const double sqrt_pi = std::sqrt(M_PI);
    for (int k = 0; k < n; ++k) {
        r.nodes[k] = es.eigenvalues()(k);
        const double v0 = es.eigenvectors()(0, k);
        r.weights[k] = sqrt_pi * v0 * v0;
    }
    return r;
}

namespace {

// the Jacobi eigendecomposition is far costlier than most single integrals,
// and the power-allocation searches evaluate thousands of them at the same
// node count; map nodes are never invalidated, so references stay good
const HermiteRule& cached_rule(int n) {
    static std::mutex mu;
    static std::map<int, HermiteRule> cache;
    const std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, gauss_hermite(n)).first;
    return it->second;
}

struct ScalarMixture {
    std::vector<cplx> means;
    std::vector<double> log_prior;
    std::vector<double> prior;
    std::vector<cplx> x1, x2; // per-pair input points
    cplx a1, a2;              // sqrt(snr)-scaled effective gains
};

ScalarMixture build_scalar(const MacSystem& sys) {
    if (!sys.scalar())
        throw std::invalid_argument("quadrature: scalar systems only");
    ScalarMixture m;
    const double rs = std::sqrt(sys.snr);
    m.a1 = rs * sys.h1(0, 0) * sys.p1(0, 0);
    m.a2 = rs * sys.h2(0, 0) * sys.p2(0, 0);
    const JointAlphabet joint = product(sys.c1, sys.c2);
    m.means.reserve(joint.pairs.size());
    for (const JointPair& p : joint.pairs) {
        m.means.push_back(m.a1 * p.x1(0) + m.a2 * p.x2(0));
        m.prior.push_back(p.prob);
        m.log_prior.push_back(std::log(p.prob));
        m.x1.push_back(p.x1(0));
        m.x2.push_back(p.x2(0));
    }
    return m;
}

struct QuadAccum {
    double e1 = 0, e2 = 0, mi = 0;
    cplx c12{0, 0};
};

// component-centered tensor grid: y = m_i + (t_a + i t_b), noise parts have
// variance 1/2 so the Hermite variable is the noise coordinate itself
QuadAccum integrate(const ScalarMixture& mx, int nodes) {
    const HermiteRule& gh = cached_rule(nodes);
    const int m = int(mx.means.size());
    QuadAccum acc;
    std::vector<double> w(m);
    for (int i = 0; i < m; ++i) {
        for (int a = 0; a < nodes; ++a) {
            for (int b = 0; b < nodes; ++b) {
                const cplx y = mx.means[i] + cplx(gh.nodes[a], gh.nodes[b]);
                double vmax = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < m; ++j) {
                    const cplx d = y - mx.means[j];
                    w[j] = mx.log_prior[j] - std::norm(d);
                    vmax = std::max(vmax, w[j]);
                }
                double tot = 0;
                for (int j = 0; j < m; ++j) {
                    w[j] = std::exp(w[j] - vmax);
                    tot += w[j];
                }
                cplx xh1{0, 0}, xh2{0, 0};
                double p1sq = 0, p2sq = 0;
                for (int j = 0; j < m; ++j) {
                    const double wj = w[j] / tot;
                    xh1 += wj * mx.x1[j];
                    xh2 += wj * mx.x2[j];
                    p1sq += wj * std::norm(mx.x1[j]);
                    p2sq += wj * std::norm(mx.x2[j]);
                }
                const double log_py_pi = std::log(tot) + vmax;
                const double wq =
                    mx.prior[i] * gh.weights[a] * gh.weights[b] / M_PI;
                acc.e1 += wq * (p1sq - std::norm(xh1));
                acc.e2 += wq * (p2sq - std::norm(xh2));
                acc.c12 += wq * xh1 * std::conj(xh2);
                // info density: -||n||^2 - log(p_y * pi)
                const double n2 =
                    gh.nodes[a] * gh.nodes[a] + gh.nodes[b] * gh.nodes[b];
                acc.mi += wq * (-n2 - log_py_pi);
            }
        }
    }
    return acc;
}

} // namespace

PosteriorStats posterior_stats_quad(const MacSystem& sys, int nodes) {
    const ScalarMixture mx = build_scalar(sys);
    const QuadAccum acc = integrate(mx, nodes);
    PosteriorStats st;
    st.e1 = Eigen::MatrixXcd::Constant(1, 1, acc.e1);
    st.e2 = Eigen::MatrixXcd::Constant(1, 1, acc.e2);
    st.cross12 = Eigen::MatrixXcd::Constant(1, 1, acc.c12);
    st.cross21 = Eigen::MatrixXcd::Constant(1, 1, std::conj(acc.c12));
    const cplx a1 = sys.h1(0, 0) * sys.p1(0, 0);
    const cplx a2 = sys.h2(0, 0) * sys.p2(0, 0);
    st.mmse1 = std::norm(a1) * acc.e1;
    st.mmse2 = std::norm(a2) * acc.e2;
    st.mmse_total = st.mmse1 + st.mmse2;
    const cplx t = a1 * acc.c12 * std::conj(a2);
    st.psi_paper = t - std::conj(t);
    st.psi_oracle = -2.0 * (a1 * acc.c12 * std::conj(a2)).real();
    st.mi = acc.mi;
    return st;
}

double mi_quad(const MacSystem& sys, int nodes) {
    return integrate(build_scalar(sys), nodes).mi;
}

namespace {

struct SuAccum {
    double e = 0, mi = 0;
};

// single-user scalar channel y = sqrt(snr) x + n, integrated directly over
// the constellation: the mercury searches invert this curve by repeated
// evaluation, so it avoids the two-user machinery entirely
SuAccum su_integrate(double snr, const Constellation& c, int nodes) {
    if (c.dim() != 1)
        throw std::invalid_argument("quadrature: scalar constellations only");
    c.validate();
    const HermiteRule& gh = cached_rule(nodes);
    const double rs = std::sqrt(snr);
    const int m = c.size();
    std::vector<cplx> mean(m), x(m);
    std::vector<double> lp(m);
    for (int k = 0; k < m; ++k) {
        x[k] = c.points[k](0);
        mean[k] = rs * x[k];
        lp[k] = std::log(c.probs[k]);
    }
    SuAccum acc;
    std::vector<double> w(m);
    for (int i = 0; i < m; ++i) {
        for (int a = 0; a < nodes; ++a) {
            for (int b = 0; b < nodes; ++b) {
                const cplx y = mean[i] + cplx(gh.nodes[a], gh.nodes[b]);
                double vmax = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < m; ++j) {
                    w[j] = lp[j] - std::norm(y - mean[j]);
                    vmax = std::max(vmax, w[j]);
                }
                double tot = 0;
                for (int j = 0; j < m; ++j) {
                    w[j] = std::exp(w[j] - vmax);
                    tot += w[j];
                }
                cplx xh{0, 0};
                double psq = 0;
                for (int j = 0; j < m; ++j) {
                    const double wj = w[j] / tot;
                    xh += wj * x[j];
                    psq += wj * std::norm(x[j]);
                }
                const double wq =
                    c.probs[i] * gh.weights[a] * gh.weights[b] / M_PI;
                acc.e += wq * (psq - std::norm(xh));
                const double n2 =
                    gh.nodes[a] * gh.nodes[a] + gh.nodes[b] * gh.nodes[b];
                acc.mi += wq * (-n2 - (std::log(tot) + vmax));
            }
        }
    }
    return acc;
}

} // namespace

double su_mmse_quad(double snr, const Constellation& c, int nodes) {
    return su_integrate(snr, c, nodes).e;
}

double su_mi_quad(double snr, const Constellation& c, int nodes) {
    return su_integrate(snr, c, nodes).mi;
}

} // namespace macmi
