#pragma once

#include <cstdint>
#include <functional>

#include "macmi/bayes_types.hpp"
#include "macmi/system.hpp"

namespace macmi {

// Gradients of the joint mutual information (nats) with respect to the
// channel and precoder matrices. All gradients follow one directional-
// derivative contract:
//     dI = 2 Re Tr{ grad^dag dM },
// which is what the entrywise finite-difference assembly
//     grad = (dI/dRe(M_ij) + i dI/dIm(M_ij)) / 2
// measures; convention_scale in GradientReport tracks that the two agree
// up to a constant 1.

// dI/dH_1 = snr (H1 P1 E1 P1' - H2 P2 E[xh2 xh1'] P1')   (' = adjoint),
// symmetric in the user index; statistics are taken from `st`.
Eigen::MatrixXcd grad_h_from_stats(const MacSystem& sys, int user,
                                   const PosteriorStats& st);

// dI/dP_1 = snr (H1' H1 P1 E1 - H1' H2 P2 E[xh2 xh1']), symmetric form
// for user 2. Satisfies grad_p * P' = H' * grad_h on the same statistics.
Eigen::MatrixXcd grad_p_from_stats(const MacSystem& sys, int user,
                                   const PosteriorStats& st);

// Same gradients with the statistics estimated internally: deterministic
// quadrature for scalar systems, Monte-Carlo otherwise.
Eigen::MatrixXcd grad_h(const MacSystem& sys, int user, uint64_t seed,
                        uint64_t n_samples, int workers = 0);
Eigen::MatrixXcd grad_p(const MacSystem& sys, int user, uint64_t seed,
                        uint64_t n_samples, int workers = 0);

// Gradient of the treat-as-noise rate of the *other* user with respect to
// the interferer precoder P_j (grad_wrt = j):
//   d I(x_k;y) / dP_j
//     = -snr^2 H_j' S^{-1} H_k P_k E_k^w P_k' H_k' S^{-1} H_j P_j,
// with S = I + snr H_j P_j P_j' H_j' and E_k^w the decoded user's error
// matrix in the whitened model. P_j only enters I(x_k;y) through S; the
// chain rule through S^{-1} is what produces the two outer S^{-1} factors
// and the leading minus (more interference can only reduce the rate).
Eigen::MatrixXcd grad_p_treat_as_noise(const MacSystem& sys, int grad_wrt,
                                       uint64_t seed, uint64_t n_samples,
                                       int workers = 0);

// d I(x_u;y|x_other) / dP_u = grad_p(u) - grad_p_treat_as_noise(u):
// the chain rule splits the joint rate into the other user's
// treat-as-noise term plus this conditional term.
Eigen::MatrixXcd grad_conditional(const MacSystem& sys, int user,
                                  uint64_t seed, uint64_t n_samples,
                                  int workers = 0);

enum class WrtMatrix { h1, h2, p1, p2 };

// Entrywise central differences of an arbitrary scalar functional of the
// system (deterministic if fn is). step <= 0 selects 1e-3*(1 + ||M||_F).
Eigen::MatrixXcd fd_gradient(const MacSystem& sys, WrtMatrix wrt, double step,
                             const std::function<double(const MacSystem&)>& fn);

// Central differences of the Monte-Carlo MI (nats); every perturbed
// evaluation reuses the same seed (common random numbers), which is what
// keeps the difference noise far below the individual std errors.
Eigen::MatrixXcd fd_gradient_oracle(const MacSystem& sys, WrtMatrix wrt,
                                    double step, uint64_t seed,
                                    uint64_t n_samples, int workers = 0);

struct GradientReport {
    Eigen::MatrixXcd analytic;
    Eigen::MatrixXcd numeric;
    double rel_error = 0;        // ||a-n||_F / max(||n||_F, 1e-12)
    double convention_scale = 1; // least-squares real scale numeric/analytic
};

GradientReport gradient_report(const Eigen::MatrixXcd& analytic,
                               const Eigen::MatrixXcd& numeric);

} // namespace macmi
