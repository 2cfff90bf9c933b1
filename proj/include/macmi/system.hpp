#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "macmi/constellation.hpp"

namespace macmi {

// two-user Gaussian MAC: y = sqrt(snr)*H1*P1*x1 + sqrt(snr)*H2*P2*x2 + n,
// n circularly symmetric complex Gaussian, unit variance per component
struct MacSystem {
    Eigen::MatrixXcd h1, h2; // n_r x n_t
    Eigen::MatrixXcd p1, p2; // n_t x n_t
    double snr = 1.0;
    Constellation c1, c2;

    int n_r() const { return int(h1.rows()); }
    int n_t() const { return int(h1.cols()); }
    bool scalar() const { return n_r() == 1 && n_t() == 1; }

    Eigen::MatrixXcd a1() const { return h1 * p1; } // per-user effective channel
    Eigen::MatrixXcd a2() const { return h2 * p2; }

    void validate() const; // dimension and snr checks, throws on failure
};

MacSystem scalar_system(cplx h1, cplx p1, cplx h2, cplx p2, double snr);
MacSystem scalar_system(cplx h1, cplx p1, cplx h2, cplx p2, double snr,
                        const Constellation& c1, const Constellation& c2);

struct ChannelSample {
    Eigen::VectorXcd x1, x2, noise, y;
};

// deterministic given (seed, start_index); thread-safe to call with disjoint
// index ranges
std::vector<ChannelSample> synthesize(const MacSystem& sys, uint64_t seed,
                                      uint64_t start_index, int count);

struct PowerReport {
    double trace1 = 0, trace2 = 0;
    bool feasible1 = false, feasible2 = false;
};

PowerReport power_check(const MacSystem& sys, double q1, double q2);

} // namespace macmi
