#pragma once

#include <vector>

#include "macmi/bayes_types.hpp"
#include "macmi/system.hpp"

namespace macmi {

// Gauss-Hermite rule for integrals against exp(-t^2); nodes ascending.
struct HermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Golub-Welsch: eigen-decomposition of the Jacobi matrix
HermiteRule gauss_hermite(int n);

// Deterministic posterior statistics and MI for scalar systems
// (n_r = n_t = 1): a tensor Gauss-Hermite grid centered on each mixture
// component. nodes is per real dimension; 128 resolves the posterior
// transition regions up to snr ~ 10 (64 visibly does not).
PosteriorStats posterior_stats_quad(const MacSystem& sys, int nodes = 128);

// MI in nats by the same grid
double mi_quad(const MacSystem& sys, int nodes = 128);

// scalar single-user helpers (user 2 absent), used by power allocation
double su_mmse_quad(double snr, const Constellation& c, int nodes = 128);
double su_mi_quad(double snr, const Constellation& c, int nodes = 128);

} // namespace macmi
