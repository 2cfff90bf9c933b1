#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace macmi {

using cplx = std::complex<double>;

// finite complex input alphabet with probabilities; unit power, zero mean
struct Constellation {
    std::vector<Eigen::VectorXcd> points;
    std::vector<double> probs;

    int dim() const { return points.empty() ? 0 : int(points[0].size()); }
    int size() const { return int(points.size()); }

    Eigen::VectorXcd mean() const;
    Eigen::MatrixXcd covariance() const;
    // throws std::invalid_argument if the invariants fail
    void validate() const;
};

Constellation bpsk();
// square QAM, Gray-indexed, unit average energy; m in {4, 16, 64}
Constellation qam(int m);
// per-user n_t-dimensional alphabet as the Cartesian power of a scalar one
Constellation cartesian_power(const Constellation& base, int n);
// by config name: "bpsk", "qpsk", "qam16", "qam64"
Constellation constellation_by_name(const std::string& name);

struct JointPair {
    Eigen::VectorXcd x1;
    Eigen::VectorXcd x2;
    double prob;
    int i1;
    int i2;
};

// all |C1|*|C2| input pairs with product probabilities, lexicographic order
struct JointAlphabet {
    std::vector<JointPair> pairs;
    int size1 = 0;
    int size2 = 0;
};

JointAlphabet product(const Constellation& c1, const Constellation& c2);

} // namespace macmi
