#pragma once

#include <cstdint>
#include <vector>

#include "macmi/bayes_types.hpp"
#include "macmi/system.hpp"

namespace macmi {

// Monte-Carlo scalar with its sampling provenance. `value` is in bits
// unless the producing function documents nats.
struct McEstimate {
    double value = 0;
    double std_error = 0;
    uint64_t n_samples = 0;
    uint64_t seed = 0;
};

// Joint mutual information I(x1,x2;y) in bits.
//
// Two estimator paths, both chunk-deterministic for any worker count:
//  - general: joint (x1,x2,noise) sampling, antithetic noise flip, and a
//    regression control variate on ||n||^2 - n_r;
//  - scalar systems with small joint alphabets additionally average the
//    transmitted pair exactly per noise draw and stratify the real noise
//    axis under a widened importance proposal, which is what makes the
//    finite-difference identity checks affordable.
McEstimate mutual_information(const MacSystem& sys, uint64_t seed,
                              uint64_t n_samples, int workers = 0);

// Same estimator, value and std_error in nats; the identity checks and the
// finite-difference gradient oracles difference this directly.
McEstimate mutual_information_nats(const MacSystem& sys, uint64_t seed,
                                   uint64_t n_samples, int workers = 0);

// I(x_k;y) with the other user's signal replaced by a Gaussian of matched
// covariance: the whitened-model reduction. Bits.
McEstimate mi_treat_as_noise(const MacSystem& sys, int decode_user,
                             uint64_t seed, uint64_t n_samples,
                             int workers = 0);

// Genie-aided conditional MI I(x_k;y|x_j), j = given_user: the known
// user's contribution is subtracted exactly (never the difference of two
// estimators, which would mix the Gaussianized and the exact model). Bits.
McEstimate conditional_mi(const MacSystem& sys, int given_user,
                          uint64_t seed, uint64_t n_samples,
                          int workers = 0);

// Exact finite-alphabet marginal MI I(x_k;y) (the interferer stays
// discrete and unknown). marginal_mi(k) + conditional_mi(given j=k) closes
// the chain rule against mutual_information on matched streams. Bits.
McEstimate marginal_mi(const MacSystem& sys, int decode_user, uint64_t seed,
                       uint64_t n_samples, int workers = 0);

struct ImmseReport {
    std::vector<double> snr_grid;
    std::vector<McEstimate> i_values;  // MI at each grid point, NATS
    std::vector<double> di_dsnr_fd;    // central difference, nats/snr
    std::vector<double> mmse_plus_psi; // mmse_total + psi_oracle
    std::vector<double> rel_errors;    // |fd - (mmse+psi)| / |fd|
    double max_rel_error = 0;
};

// Verifies dI/dsnr = mmse_total + psi_oracle on a grid. MI differences use
// common random numbers across snr +/- fd_step; the statistics side comes
// from the deterministic quadrature for scalar systems and from
// posterior_stats otherwise. fd_step <= 0 selects min(0.05*snr, 0.1) per
// point (the relative step, capped where truncation error would exceed
// the MC error floor).
ImmseReport immse_identity_check(const MacSystem& sys_template,
                                 const std::vector<double>& snr_grid,
                                 double fd_step, uint64_t seed,
                                 uint64_t n_samples, int workers = 0);

// Taylor coefficients of I(snr) in nats about snr = 0, exactly as the
// trace expressions print them: first = ||H1P1||_F^2 + ||H2P2||_F^2; the
// second-order cross terms Tr{AA'BB'} - Tr{BB'AA'} cancel for any inputs
// and are kept literal rather than simplified away. The printed second
// order omits input-kurtosis corrections; tests measure where it holds.
struct LowSnrExpansion {
    double first_order = 0;
    double second_order = 0;
};

LowSnrExpansion low_snr_expansion(const MacSystem& sys);

// Gaussian-input closed forms (oracles for tests and the deterministic
// solver path): joint MI in nats and the error-covariance blocks of the
// stacked joint input.
double gaussian_mi_nats(const MacSystem& sys);
PosteriorStats gaussian_stats(const MacSystem& sys);

} // namespace macmi
