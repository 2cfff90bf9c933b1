#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "macmi/constellation.hpp"

namespace macmi {

struct PosteriorAtY {
    Eigen::VectorXcd y;
    double log_py = 0; // nats
    Eigen::VectorXcd xhat1, xhat2;
    std::vector<double> posterior_weights; // joint-pair order
};

// expectations over y of the per-user error covariances and the cross terms
struct PosteriorStats {
    Eigen::MatrixXcd e1, e2;           // E[(x_k - xhat_k)(x_k - xhat_k)^dag]
    Eigen::MatrixXcd cross12, cross21; // E[xhat1 xhat2^dag], E[xhat2 xhat1^dag]
    double mmse1 = 0, mmse2 = 0, mmse_total = 0;
    cplx psi_paper{0, 0}; // the printed two-trace form (imaginary by algebra)
    double psi_oracle = 0; // E||z-zhat||^2 - mmse1 - mmse2, z = combined signal
    double mi = 0;         // nats; filled by the quadrature path, else NaN
    double se_mmse1 = 0, se_mmse2 = 0, se_mmse_total = 0, se_psi_oracle = 0;
    std::uint64_t sample_count = 0;
    std::uint64_t seed = 0;
};

} // namespace macmi
