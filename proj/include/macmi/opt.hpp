#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "macmi/constellation.hpp"
#include "macmi/info.hpp"
#include "macmi/system.hpp"

namespace macmi {

struct SolverOptions {
    double damping = 0.25;   // step fraction toward the fixed-point map
    double tolerance = 1e-4; // target kkt residual
    int max_iters = 60;
    int restarts = 0;  // additional random-unitary initializations
    uint64_t seed = 1;
    uint64_t samples_initial = 20000; // per-iteration statistics budget;
                                      // doubles every 10 iterations
    bool gaussian_inputs = false; // closed-form statistics and objective
    int workers = 0;
};

struct PrecoderSolution {
    Eigen::MatrixXcd p1, p2;
    double nu1 = 0, nu2 = 0; // multipliers that normalize the map output
    double kkt_residual = 0; // max_k ||nu_k P_k - map_k(P)||_F, final stats
    int iterations = 0;
    bool converged = false;
    McEstimate objective; // joint MI, bits
    std::vector<double> residual_history;
};

// Damped fixed-point iteration on the precoder stationarity map
//   nu_k P_k = H_k' H_k P_k E_k - H_k' H_j P_j E[xhat_j xhat_k'],
// with nu_k resolved each step by scaling the map output onto the power
// boundary tr{P P'} = Q_k. Statistics are re-estimated per iteration on a
// deterministic seed schedule with a growing budget; the objective used to
// pick the best iterate (and restart) is evaluated under one fixed seed so
// the comparison is common-random-number fair. A user whose template
// precoder is exactly zero is held silent. Non-convergence is reported via
// `converged` and the residual history, never hidden.
PrecoderSolution solve_precoders(const MacSystem& sys_template, double q1,
                                 double q2, const SolverOptions& opts);

struct PrecoderStructure {
    Eigen::MatrixXcd u, d, r; // p = u * d * r^dag
};

// SVD with fixed conventions: singular values descending in d; each right
// singular vector's first significant entry made real-positive (the same
// phase applied to the matching left vector, so the product is unchanged).
PrecoderStructure structure_decompose(const Eigen::MatrixXcd& p);

struct PowerAllocation {
    std::vector<double> powers1, powers2; // per sub-channel
    double gamma1 = 0, gamma2 = 0; // multipliers normalized by received snr
    double kkt_residual = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> residual_history;
};

// Two-user per-sub-channel power allocation (diagonal precoders with
// entries sqrt(p_kj)). Each sub-channel j carries a scalar two-user system
// with gains (gains1[j], gains2[j]); statistics per sub-channel come from
// the deterministic quadrature (or the Gaussian closed form when
// opts.gaussian_inputs). The fixed point iterates
//   p_kj <- max(g_kj, 0) / gamma_k,  gamma_k: sum_j p_kj = Q_k,
// damped, with steps accepted only if the summed MI does not decrease --
// the kkt residual is provably non-monotone along the solution path, so
// acceptance is by objective and `converged` reports whether the final
// residual met the tolerance.
PowerAllocation solve_power_allocation(const std::vector<cplx>& gains1,
                                       const std::vector<cplx>& gains2,
                                       double q1, double q2, double snr,
                                       const Constellation& base1,
                                       const Constellation& base2,
                                       const SolverOptions& opts);

// Single-user mercury/waterfilling: p_j = mmse^{-1}(gamma/g_j)/(snr*g_j)
// for gamma < g_j (else 0), with gamma bisected until the budget binds.
// `gains` are the squared channel magnitudes |h_j|^2; mmse^{-1} is found by
// monotone root-finding on the quadrature-evaluated scalar MMSE curve of
// the constellation.
PowerAllocation mercury_waterfilling(const std::vector<double>& gains,
                                     double budget, double snr,
                                     const Constellation& base);

// Gaussian-input specialization: mmse(s) = 1/(1+s) makes the rule collapse
// to classic waterfilling; kept as the deterministic reduction path.
PowerAllocation mercury_waterfilling_gaussian(const std::vector<double>& gains,
                                              double budget, double snr);

// Closed-form waterfilling oracle: p_j = max(0, mu - 1/(snr*g_j)) with mu
// chosen so the budget binds.
PowerAllocation waterfilling(const std::vector<double>& gains, double budget,
                             double snr);

// Low-snr transmit covariances: Z_k proportional to the eigenstructure of
// H_k^dag H_k with eigenvalue weighting, trace-normalized to the budget.
// (The input covariance lives in the transmit space, hence H'H rather than
// the received-side HH' -- for square channels the spectra agree.)
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd>
low_snr_precoder(const MacSystem& sys, double q1, double q2);

} // namespace macmi
