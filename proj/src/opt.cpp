#include "macmi/opt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "macmi/bayes.hpp"
#include "macmi/grad.hpp"
#include "macmi/quadrature.hpp"
#include "macmi/rng.hpp"

namespace macmi {

namespace {

constexpr double kLog2 = 0.69314718055994530942;

PosteriorStats stats_at(const MacSystem& sys, bool gaussian, uint64_t seed,
                        uint64_t n_samples, int workers) {
    if (gaussian) return gaussian_stats(sys);
    if (sys.scalar()) return posterior_stats_quad(sys);
    return posterior_stats(sys, seed, n_samples, workers);
}

McEstimate objective_at(const MacSystem& sys, bool gaussian, uint64_t seed,
                        uint64_t n_samples, int workers) {
    if (gaussian || sys.scalar()) {
        McEstimate est;
        est.value = (gaussian ? gaussian_mi_nats(sys) : mi_quad(sys)) / kLog2;
        est.seed = seed;
        return est;
    }
    return mutual_information(sys, seed, n_samples, workers);
}

// Haar-ish random unitary: QR of a complex Gaussian matrix with the column
// phases fixed by R's diagonal so the result is deterministic in the seed.
Eigen::MatrixXcd random_unitary(int n, uint64_t seed) {
    CounterRng rng(seed, 0x756e6974ULL);
    Eigen::MatrixXcd a(n, n);
    uint64_t k = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            double re, im;
            rng.normal_pair(k++, re, im);
            a(i, j) = cplx(re, im);
        }
    const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
    Eigen::MatrixXcd q =
        qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
    const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        const double m = std::abs(r(j, j));
        if (m > 0) q.col(j) *= r(j, j) / m;
    }
    return q;
}

} // namespace

PrecoderSolution solve_precoders(const MacSystem& sys_template, double q1,
                                 double q2, const SolverOptions& opts) {
    sys_template.validate();
    const bool active1 = sys_template.p1.squaredNorm() > 0;
    const bool active2 = sys_template.p2.squaredNorm() > 0;
    if (active1 && !(q1 > 0))
        throw std::invalid_argument("solve_precoders: q1 must be positive");
    if (active2 && !(q2 > 0))
        throw std::invalid_argument("solve_precoders: q2 must be positive");
    if (opts.max_iters < 1)
        throw std::invalid_argument("solve_precoders: max_iters must be >= 1");

    const int nt = sys_template.n_t();
    const uint64_t obj_seed = derive_seed(opts.seed, 0x0b7ec7ULL);
    constexpr uint64_t kSampleCap = 4000000;

    PrecoderSolution best;
    best.p1 = sys_template.p1;
    best.p2 = sys_template.p2;
    double best_val = -std::numeric_limits<double>::infinity();
    uint64_t n_last = opts.samples_initial;

    for (int r = 0; r <= std::max(0, opts.restarts); ++r) {
        MacSystem sys = sys_template;
        const Eigen::MatrixXcd basis =
            r == 0 ? Eigen::MatrixXcd::Identity(nt, nt)
                   : random_unitary(nt, derive_seed(opts.seed, 0x5eedULL + r));
        if (active1) sys.p1 = std::sqrt(q1 / nt) * basis;
        if (active2) sys.p2 = std::sqrt(q2 / nt) * basis;

        std::vector<double> history;
        history.reserve(size_t(opts.max_iters));
        bool improved = false;
        int iters = 0;

        for (int it = 0; it < opts.max_iters; ++it) {
            const uint64_t n_it = std::min<uint64_t>(
                opts.samples_initial << std::min(it / 10, 20), kSampleCap);
            n_last = std::max(n_last, n_it);
            const PosteriorStats st = stats_at(
                sys, opts.gaussian_inputs,
                derive_seed(opts.seed, 0x57a75ULL + uint64_t(it) +
                                           1000 * uint64_t(r)),
                n_it, opts.workers);

            Eigen::MatrixXcd rhs1 = Eigen::MatrixXcd::Zero(nt, nt);
            Eigen::MatrixXcd rhs2 = Eigen::MatrixXcd::Zero(nt, nt);
            double nu1 = 0, nu2 = 0;
            if (active1) {
                rhs1 = grad_p_from_stats(sys, 1, st) / sys.snr;
                nu1 = std::sqrt(rhs1.squaredNorm() / q1);
            }
            if (active2) {
                rhs2 = grad_p_from_stats(sys, 2, st) / sys.snr;
                nu2 = std::sqrt(rhs2.squaredNorm() / q2);
            }
            double resid = 0;
            if (active1) resid = std::max(resid, (nu1 * sys.p1 - rhs1).norm());
            if (active2) resid = std::max(resid, (nu2 * sys.p2 - rhs2).norm());
            history.push_back(resid);
            iters = it + 1;

            const McEstimate obj =
                objective_at(sys, opts.gaussian_inputs, obj_seed,
                             opts.samples_initial, opts.workers);
            if (obj.value > best_val) {
                best_val = obj.value;
                best.p1 = sys.p1;
                best.p2 = sys.p2;
                best.objective = obj;
                improved = true;
            }
            if (resid <= opts.tolerance) break;

            const double a = opts.damping;
            if (active1 && nu1 > 1e-300)
                sys.p1 = (1.0 - a) * sys.p1 + (a / nu1) * rhs1;
            if (active2 && nu2 > 1e-300)
                sys.p2 = (1.0 - a) * sys.p2 + (a / nu2) * rhs2;
        }
        if (improved) {
            best.residual_history = std::move(history);
            best.iterations = iters;
        }
    }

    // re-measure the stationarity gap at the returned point with a fresh
    // seed and the largest sample budget reached, so the reported residual
    // is not the one that happened to look best under iteration noise
    MacSystem sys = sys_template;
    sys.p1 = best.p1;
    sys.p2 = best.p2;
    const PosteriorStats st =
        stats_at(sys, opts.gaussian_inputs, derive_seed(opts.seed, 0xf17a1ULL),
                 std::min<uint64_t>(2 * n_last, kSampleCap), opts.workers);
    double resid = 0;
    if (active1) {
        const Eigen::MatrixXcd rhs = grad_p_from_stats(sys, 1, st) / sys.snr;
        best.nu1 = std::sqrt(rhs.squaredNorm() / q1);
        resid = std::max(resid, (best.nu1 * sys.p1 - rhs).norm());
    }
    if (active2) {
        const Eigen::MatrixXcd rhs = grad_p_from_stats(sys, 2, st) / sys.snr;
        best.nu2 = std::sqrt(rhs.squaredNorm() / q2);
        resid = std::max(resid, (best.nu2 * sys.p2 - rhs).norm());
    }
    best.kkt_residual = resid;
    best.converged = resid <= opts.tolerance;
    return best;
}

PrecoderStructure structure_decompose(const Eigen::MatrixXcd& p) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
        p, Eigen::ComputeFullU | Eigen::ComputeFullV);
    PrecoderStructure s;
    s.u = svd.matrixU();
    s.r = svd.matrixV();
    s.d = Eigen::MatrixXcd::Zero(p.rows(), p.cols());
    const int k = int(svd.singularValues().size());
    for (int j = 0; j < k; ++j) s.d(j, j) = svd.singularValues()(j);

    // phase convention: first significant entry of each right vector made
    // real-positive; the paired left vector absorbs the conjugate phase so
    // u * d * r^dag is unchanged
    const int paired = int(std::min(s.u.cols(), s.r.cols()));
    for (int j = 0; j < int(s.r.cols()); ++j) {
        cplx ph(1.0, 0.0);
        for (int i = 0; i < int(s.r.rows()); ++i) {
            const double m = std::abs(s.r(i, j));
            if (m > 1e-9) {
                ph = std::conj(s.r(i, j)) / m;
                break;
            }
        }
        s.r.col(j) *= ph;
        if (j < paired) s.u.col(j) *= ph;
    }
    return s;
}

namespace {

struct AllocEval {
    std::vector<double> g1, g2; // per-sub-channel stationarity targets
    double mi = 0;              // summed MI, nats
};

// Per-sub-channel statistics for diagonal precoding: sub-channel j is a
// scalar two-user system with amplitudes sqrt(p_kj). The stationarity
// target for user k on channel j is
//   g_kj = p_kj |h_kj|^2 E_kj - Re{ sqrt(p_kj) h_kj^* h_jj sqrt(p_other) C },
// the diagonal entry of P_k^dag times the precoder gradient map, which the
// kkt conditions equate to gamma_k * p_kj.
AllocEval eval_allocation(const std::vector<cplx>& h1,
                          const std::vector<cplx>& h2,
                          const std::vector<double>& w1,
                          const std::vector<double>& w2, double snr,
                          const Constellation& base1,
                          const Constellation& base2, bool gaussian) {
    const size_t n = h1.size();
    AllocEval ev;
    ev.g1.resize(n);
    ev.g2.resize(n);
    for (size_t j = 0; j < n; ++j) {
        const MacSystem sys =
            scalar_system(h1[j], std::sqrt(w1[j]), h2[j], std::sqrt(w2[j]),
                          snr, base1, base2);
        const PosteriorStats st =
            gaussian ? gaussian_stats(sys) : posterior_stats_quad(sys);
        const double e1 = st.e1(0, 0).real();
        const double e2 = st.e2(0, 0).real();
        const cplx c12 = st.cross12(0, 0);
        const cplx a = std::sqrt(w1[j]) * std::conj(h1[j]) * h2[j] *
                       std::sqrt(w2[j]);
        ev.g1[j] = w1[j] * std::norm(h1[j]) * e1 - (a * std::conj(c12)).real();
        ev.g2[j] = w2[j] * std::norm(h2[j]) * e2 - (std::conj(a) * c12).real();
        ev.mi += st.mi;
    }
    return ev;
}

} // namespace

PowerAllocation solve_power_allocation(const std::vector<cplx>& gains1,
                                       const std::vector<cplx>& gains2,
                                       double q1, double q2, double snr,
                                       const Constellation& base1,
                                       const Constellation& base2,
                                       const SolverOptions& opts) {
    if (gains1.empty() || gains1.size() != gains2.size())
        throw std::invalid_argument(
            "solve_power_allocation: gain vectors empty or mismatched");
    if (!(snr > 0))
        throw std::invalid_argument("solve_power_allocation: snr must be > 0");
    if (base1.dim() != 1 || base2.dim() != 1)
        throw std::invalid_argument(
            "solve_power_allocation: base constellations must be scalar");

    const size_t n = gains1.size();
    const bool act1 = q1 > 0;
    const bool act2 = q2 > 0;
    PowerAllocation out;
    out.powers1.assign(n, act1 ? q1 / double(n) : 0.0);
    out.powers2.assign(n, act2 ? q2 / double(n) : 0.0);

    AllocEval ev = eval_allocation(gains1, gains2, out.powers1, out.powers2,
                                   snr, base1, base2, opts.gaussian_inputs);
    const auto gamma_of = [](const std::vector<double>& g, double q) {
        double s = 0;
        for (double v : g) s += std::max(v, 0.0);
        return s / q;
    };

    for (int it = 0; it < opts.max_iters; ++it) {
        const double gm1 = act1 ? gamma_of(ev.g1, q1) : 0.0;
        const double gm2 = act2 ? gamma_of(ev.g2, q2) : 0.0;

        // kkt violation: active powers must sit on gamma*p = g; powers at
        // (numerical) zero only need the target to be non-positive
        double resid = 0;
        const auto violation = [&](const std::vector<double>& p,
                                   const std::vector<double>& g, double gm) {
            for (size_t j = 0; j < n; ++j)
                resid = std::max(resid, p[j] > 1e-12
                                            ? std::abs(gm * p[j] - g[j])
                                            : std::max(g[j], 0.0));
        };
        if (act1) violation(out.powers1, ev.g1, gm1);
        if (act2) violation(out.powers2, ev.g2, gm2);

        out.residual_history.push_back(resid);
        out.gamma1 = gm1;
        out.gamma2 = gm2;
        out.kkt_residual = resid;
        out.iterations = it;
        if (resid <= opts.tolerance) {
            out.converged = true;
            break;
        }

        std::vector<double> c1v(n, 0.0), c2v(n, 0.0);
        if (act1 && gm1 > 0)
            for (size_t j = 0; j < n; ++j)
                c1v[j] = std::max(ev.g1[j], 0.0) / gm1;
        if (act2 && gm2 > 0)
            for (size_t j = 0; j < n; ++j)
                c2v[j] = std::max(ev.g2[j], 0.0) / gm2;

        // damped move toward the kkt point, backtracking on the summed MI:
        // the kkt residual is not monotone along the solution path, so the
        // objective is the only safe acceptance test
        double a = opts.damping;
        bool accepted = false;
        while (a >= 1e-7) {
            std::vector<double> t1(n), t2(n);
            for (size_t j = 0; j < n; ++j) {
                t1[j] = act1 ? (1.0 - a) * out.powers1[j] + a * c1v[j] : 0.0;
                t2[j] = act2 ? (1.0 - a) * out.powers2[j] + a * c2v[j] : 0.0;
            }
            AllocEval trial = eval_allocation(gains1, gains2, t1, t2, snr,
                                              base1, base2,
                                              opts.gaussian_inputs);
            if (trial.mi >= ev.mi - 1e-13) {
                out.powers1.swap(t1);
                out.powers2.swap(t2);
                ev = std::move(trial);
                accepted = true;
                break;
            }
            a *= 0.5;
        }
        if (!accepted) break; // stalled: no non-decreasing step remains
    }
    return out;
}

namespace {

// shared gamma-bisection engine; mmse_inv maps a target MMSE in (0,1) to
// the effective snr that attains it
PowerAllocation mercury_core(const std::vector<double>& gains, double budget,
                             double snr,
                             const std::function<double(double)>& mmse_inv) {
    if (gains.empty())
        throw std::invalid_argument("mercury_waterfilling: no sub-channels");
    for (double g : gains)
        if (!std::isfinite(g) || g < 0)
            throw std::invalid_argument(
                "mercury_waterfilling: gains must be finite and >= 0");
    if (!std::isfinite(budget) || budget < 0)
        throw std::invalid_argument(
            "mercury_waterfilling: budget must be finite and >= 0");
    if (!(snr > 0))
        throw std::invalid_argument("mercury_waterfilling: snr must be > 0");

    const size_t n = gains.size();
    PowerAllocation out;
    out.powers1.assign(n, 0.0);
    const double gmax = *std::max_element(gains.begin(), gains.end());
    if (budget <= 0) {
        out.converged = true;
        return out;
    }
    if (gmax <= 0) {
        out.kkt_residual = budget; // nothing can absorb the budget
        return out;
    }

    std::vector<double> p(n, 0.0);
    const auto total_at = [&](double gamma) {
        double tot = 0;
        for (size_t j = 0; j < n; ++j) {
            p[j] = gamma < gains[j]
                       ? mmse_inv(gamma / gains[j]) / (snr * gains[j])
                       : 0.0;
            tot += p[j];
        }
        return tot;
    };

    // total power is strictly decreasing in gamma: expand the lower bracket
    // until it over-spends, then bisect
    double lo = gmax * 1e-12, hi = gmax;
    for (int guard = 0; guard < 60 && total_at(lo) < budget; ++guard)
        lo *= 1e-3;
    int it = 0;
    for (; it < 200 && hi - lo > 1e-13 * gmax; ++it) {
        const double mid = 0.5 * (lo + hi);
        (total_at(mid) > budget ? lo : hi) = mid;
    }
    out.gamma1 = 0.5 * (lo + hi);
    const double tot = total_at(out.gamma1);
    out.powers1 = p;
    out.iterations = it;
    out.kkt_residual = std::abs(tot - budget);
    out.converged = out.kkt_residual <= 1e-9 * std::max(1.0, budget);
    return out;
}

} // namespace

PowerAllocation mercury_waterfilling(const std::vector<double>& gains,
                                     double budget, double snr,
                                     const Constellation& base) {
    if (base.dim() != 1)
        throw std::invalid_argument(
            "mercury_waterfilling: constellation must be scalar");
    // monotone inversion of the quadrature MMSE curve: mmse(0) = 1 by the
    // unit-covariance normalization and decays to 0, so bracket-doubling
    // plus bisection is exact to the tolerance below
    const auto mmse_inv = [&base](double theta) {
        double lo = 0.0, hi = 1.0;
        for (int guard = 0; guard < 60 && su_mmse_quad(hi, base) > theta;
             ++guard) {
            lo = hi;
            hi *= 2.0;
        }
        for (int it = 0; it < 120 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            (su_mmse_quad(mid, base) > theta ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    return mercury_core(gains, budget, snr, mmse_inv);
}

PowerAllocation mercury_waterfilling_gaussian(const std::vector<double>& gains,
                                              double budget, double snr) {
    // Gaussian inputs: mmse(s) = 1/(1+s), so the inverse is closed-form and
    // the rule reduces to waterfilling
    return mercury_core(gains, budget, snr,
                        [](double theta) { return 1.0 / theta - 1.0; });
}

PowerAllocation waterfilling(const std::vector<double>& gains, double budget,
                             double snr) {
    if (gains.empty())
        throw std::invalid_argument("waterfilling: no sub-channels");
    if (!(snr > 0))
        throw std::invalid_argument("waterfilling: snr must be > 0");
    const size_t n = gains.size();
    PowerAllocation out;
    out.powers1.assign(n, 0.0);
    out.converged = true;

    std::vector<size_t> idx;
    for (size_t j = 0; j < n; ++j)
        if (gains[j] > 0) idx.push_back(j);
    if (idx.empty() || budget <= 0) {
        out.converged = budget <= 0;
        out.kkt_residual = budget;
        return out;
    }
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return gains[a] > gains[b]; });
    std::vector<double> cost(idx.size());
    for (size_t k = 0; k < idx.size(); ++k)
        cost[k] = 1.0 / (snr * gains[idx[k]]);
    std::vector<double> pre(idx.size() + 1, 0.0);
    for (size_t k = 0; k < idx.size(); ++k) pre[k + 1] = pre[k] + cost[k];

    // largest active set whose water level keeps its weakest channel above
    // zero power
    double mu = 0;
    size_t active = 1;
    for (size_t k = idx.size(); k >= 1; --k) {
        mu = (budget + pre[k]) / double(k);
        if (mu > cost[k - 1]) {
            active = k;
            break;
        }
    }
    for (size_t k = 0; k < active; ++k)
        out.powers1[idx[k]] = mu - cost[k];
    out.gamma1 = 1.0 / (snr * mu); // same multiplier convention as mercury
    return out;
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd>
low_snr_precoder(const MacSystem& sys, double q1, double q2) {
    sys.validate();
    const auto cov_for = [](const Eigen::MatrixXcd& h,
                            double q) -> Eigen::MatrixXcd {
        const int nt = int(h.cols());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.adjoint() * h);
        const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
        const double tot = lam.sum();
        if (!(q > 0) || tot <= 0) return Eigen::MatrixXcd::Zero(nt, nt);
        return es.eigenvectors() * ((q / tot) * lam).asDiagonal() *
               es.eigenvectors().adjoint();
    };
    return {cov_for(sys.h1, q1), cov_for(sys.h2, q2)};
}

} // namespace macmi
