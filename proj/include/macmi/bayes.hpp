#pragma once

#include <cstdint>

#include "macmi/bayes_types.hpp"
#include "macmi/system.hpp"

namespace macmi {

// log p(y | x1, x2) in nats: -n_r*log(pi) - ||y - sqrt(snr)(H1P1x1 + H2P2x2)||^2
double log_likelihood(const MacSystem& sys, const Eigen::VectorXcd& y,
                      const Eigen::VectorXcd& x1, const Eigen::VectorXcd& x2);

// exact posterior over the joint input alphabet at one received vector;
// weights in lexicographic pair order (user 1 outer, user 2 inner)
PosteriorAtY posterior(const MacSystem& sys, const Eigen::VectorXcd& y);

// Monte-Carlo expectation over y of the per-user error covariances, the
// cross terms E[xhat1 xhat2^dag], and the psi correction; (x1, x2, noise)
// are drawn jointly with the same streams as synthesize(). Chunked with a
// fixed reduction order: bit-identical for any worker count.
// workers <= 0 picks the hardware concurrency.
PosteriorStats posterior_stats(const MacSystem& sys, uint64_t seed,
                               uint64_t n_samples, int workers = 0);

// Residuals of the estimate identity
//   sqrt(snr)(H1P1 xhat1 + H2P2 xhat2) = y + grad_y p_y / p_y,
// with the mixture score evaluated in closed form. `residual` carries the
// sqrt(snr)-scaled statement (the standard mixture-score identity);
// `residual_unscaled` drops the sqrt(snr) factors on the left side, which
// is how the estimate relation is sometimes quoted -- reported rather than
// silently discarded, since it only agrees at snr = 1.
struct ScoreIdentityReport {
    double residual = 0;
    double residual_unscaled = 0;
};

ScoreIdentityReport score_identity_report(const MacSystem& sys,
                                          const Eigen::VectorXcd& y);
double score_identity_residual(const MacSystem& sys,
                               const Eigen::VectorXcd& y);

// Linear MMSE (Wiener) estimates of both users. The inverse lives in the
// output space: xhat_k = Pt_k^dag H_k^dag (I + sum_j H_j Pt_j Pt_j^dag
// H_j^dag)^{-1} y with Pt_j = sqrt(snr) P_j, which is the form that stays
// well-defined for n_r != n_t and minimizes the per-user MSE.
struct WienerEstimates {
    Eigen::VectorXcd xhat1, xhat2;
};

WienerEstimates wiener_estimates(const MacSystem& sys,
                                 const Eigen::VectorXcd& y);

} // namespace macmi
