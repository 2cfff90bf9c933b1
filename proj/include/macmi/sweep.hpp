#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "macmi/bayes_types.hpp"
#include "macmi/config.hpp"
#include "macmi/opt.hpp"
#include "macmi/system.hpp"

namespace macmi {

// Batch experiment over a grid of (p1 power, p2 power, snr) values. Power
// axes rescale the template precoders to the requested squared Frobenius
// norm (so a scalar template sweeps the per-user transmit power exactly);
// the snr axis overrides the template snr. An absent axis keeps the
// template value as a single grid point.
struct SweepSpec {
    std::string experiment; // mi-surface | mmse-surface | per-user-mmse |
                            // covariance-surface | power-allocation |
                            // immse-check | gradient-check | lowsnr-check |
                            // precode | mercury
    MacSystem base;
    std::vector<double> p1_axis, p2_axis, snr_axis;
    double q1 = 1.0, q2 = 1.0;
    std::vector<cplx> gains1, gains2; // per-sub-channel (allocation runs)
    uint64_t seed = 1;
    uint64_t n_samples = 200000;
    int workers = 0; // 0: hardware concurrency
    bool force_mc = false; // config "estimator=mc": Monte Carlo even where
                           // the deterministic quadrature would apply
    double fd_step = 0;    // finite-difference step for the check
                           // experiments; 0 picks the scale automatically
    SolverOptions solver;
    std::string out_path; // empty: CSV not written to disk
    uint64_t provenance_hash = 0; // config hash stamped into the CSV header
};

// keys: experiment, out, seed, n_samples, workers, q1, q2, gains1, gains2,
// axis ranges {p1,p2,snr}_{min,max,step} (or fixed via the system keys),
// solver knobs damping/tolerance/max_iters/restarts/samples_initial/
// gaussian_inputs, plus the system keys understood by system_from_config
SweepSpec sweep_from_config(const Config& cfg);

struct SweepResult {
    std::string csv; // complete file content (also written to out_path)
    size_t rows = 0;
    std::string summary; // short human-readable run description
};

// Runs the experiment over the whole grid. Grid points are independent and
// run on a worker pool; per-point seeds derive from (seed, point index) and
// rows are assembled in grid order, so the CSV is byte-identical for any
// worker count. A non-finite metric aborts with the grid point named.
SweepResult run_sweep(const SweepSpec& spec);

// The two cross-channel coupling matrices that enter each user's precoder
// gradient with a minus sign: coupling12 = H1^dag H2 P2 E[xh2 xh1^dag] and
// coupling21 = H2^dag H1 P1 E[xh1 xh2^dag]. For scalar systems the same
// quantities are re-expressed as the normalized covariance of the scaled
// interferer estimate (the single-channel rewrite), which is what the
// surface experiments visualize.
struct InterferenceReport {
    Eigen::MatrixXcd coupling12, coupling21;
    cplx rewrite12{0, 0}, rewrite21{0, 0};
    bool has_rewrite = false; // scalar systems only
    PosteriorStats stats;     // statistics the couplings were formed from
};

InterferenceReport interference_report(const MacSystem& sys, uint64_t seed,
                                       uint64_t n_samples, int workers = 0);

} // namespace macmi
