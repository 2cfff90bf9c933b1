#include "macmi/constellation.hpp"

#include <cmath>
#include <stdexcept>

namespace macmi {

Eigen::VectorXcd Constellation::mean() const {
    Eigen::VectorXcd m = Eigen::VectorXcd::Zero(dim());
    for (int i = 0; i < size(); ++i)
        m += probs[i] * points[i];
    return m;
}

Eigen::MatrixXcd Constellation::covariance() const {
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(dim(), dim());
    for (int i = 0; i < size(); ++i)
        c += probs[i] * (points[i] * points[i].adjoint());
    return c;
}

void Constellation::validate() const {
    if (points.empty() || points.size() != probs.size())
        throw std::invalid_argument("constellation: points/probs mismatch");
    const int d = dim();
    double psum = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] < 0)
            throw std::invalid_argument("constellation: negative probability");
        if (points[i].size() != d)
            throw std::invalid_argument("constellation: ragged point dims");
        psum += probs[i];
    }
    if (std::abs(psum - 1.0) > 1e-12)
        throw std::invalid_argument("constellation: probabilities sum != 1");
    if (mean().norm() > 1e-12)
        throw std::invalid_argument("constellation: nonzero mean");
    Eigen::MatrixXcd c = covariance();
    if ((c - Eigen::MatrixXcd::Identity(d, d)).norm() > 1e-9)
        throw std::invalid_argument("constellation: covariance != identity");
}

Constellation bpsk() {
    Constellation c;
    c.points.resize(2, Eigen::VectorXcd(1));
    c.points[0](0) = cplx(1.0, 0.0);
    c.points[1](0) = cplx(-1.0, 0.0);
    c.probs = {0.5, 0.5};
    return c;
}

Constellation qam(int m) {
    int side = int(std::lround(std::sqrt(double(m))));
    if (side * side != m || m < 4 || (m & (m - 1)) != 0)
        throw std::invalid_argument("qam: order must be 4, 16, or 64");
    // PAM levels +-1, +-3, ...; average complex-symbol energy 2(side^2-1)/3
    const double scale = std::sqrt(3.0 / (2.0 * (side * side - 1)));
    Constellation c;
    c.points.reserve(m);
    c.probs.assign(m, 1.0 / m);
    for (int i = 0; i < side; ++i) {
        const int gi = i ^ (i >> 1); // Gray rank along the in-phase axis
        for (int j = 0; j < side; ++j) {
            const int gj = j ^ (j >> 1);
            Eigen::VectorXcd p(1);
            p(0) = cplx((2 * gi - side + 1) * scale,
                        (2 * gj - side + 1) * scale);
            c.points.push_back(p);
        }
    }
    return c;
}

Constellation cartesian_power(const Constellation& base, int n) {
    if (n < 1)
        throw std::invalid_argument("cartesian_power: n must be >= 1");
    Constellation out;
    const int bs = base.size();
    const int bd = base.dim();
    long total = 1;
    for (int i = 0; i < n; ++i)
        total *= bs;
    out.points.reserve(total);
    out.probs.reserve(total);
    for (long idx = 0; idx < total; ++idx) {
        Eigen::VectorXcd p(bd * n);
        double prob = 1.0;
        long rem = idx;
        for (int k = n - 1; k >= 0; --k) { // lexicographic in base indices
            const long sel = rem % bs;
            rem /= bs;
            p.segment(k * bd, bd) = base.points[sel];
            prob *= base.probs[sel];
        }
        out.points.push_back(std::move(p));
        out.probs.push_back(prob);
    }
    return out;
}

Constellation constellation_by_name(const std::string& name) {
    if (name == "bpsk")
        return bpsk();
    if (name == "qpsk")
        return qam(4);
    if (name == "qam16")
        return qam(16);
    if (name == "qam64")
        return qam(64);
    throw std::invalid_argument("unknown constellation: " + name);
}

JointAlphabet product(const Constellation& c1, const Constellation& c2) {
    JointAlphabet j;
    j.size1 = c1.size();
    j.size2 = c2.size();
    j.pairs.reserve(std::size_t(j.size1) * j.size2);
    for (int a = 0; a < j.size1; ++a)
        for (int b = 0; b < j.size2; ++b)
            j.pairs.push_back(
                {c1.points[a], c2.points[b], c1.probs[a] * c2.probs[b], a, b});
    return j;
}

} // namespace macmi
