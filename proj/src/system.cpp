#include "macmi/system.hpp"

#include <cmath>
#include <stdexcept>

#include "macmi/rng.hpp"

namespace macmi {

namespace {
constexpr uint64_t kStreamSymbols1 = 0x73796d31;
constexpr uint64_t kStreamSymbols2 = 0x73796d32;
constexpr uint64_t kStreamNoise = 0x6e6f6973;
} // namespace

void MacSystem::validate() const {
    const auto nr = h1.rows();
    const auto nt = h1.cols();
    if (h2.rows() != nr || h2.cols() != nt)
        throw std::invalid_argument("system: h1/h2 dimensions differ");
    if (p1.rows() != nt || p1.cols() != nt || p2.rows() != nt || p2.cols() != nt)
        throw std::invalid_argument("system: precoders must be n_t x n_t");
    if (!(snr >= 0))
        throw std::invalid_argument("system: snr must be >= 0");
    if (c1.dim() != nt || c2.dim() != nt)
        throw std::invalid_argument("system: constellation dim != n_t");
}

MacSystem scalar_system(cplx h1, cplx p1, cplx h2, cplx p2, double snr) {
    return scalar_system(h1, p1, h2, p2, snr, bpsk(), bpsk());
}

MacSystem scalar_system(cplx h1v, cplx p1v, cplx h2v, cplx p2v, double snr,
                        const Constellation& c1, const Constellation& c2) {
    MacSystem s;
    s.h1 = Eigen::MatrixXcd::Constant(1, 1, h1v);
    s.h2 = Eigen::MatrixXcd::Constant(1, 1, h2v);
    s.p1 = Eigen::MatrixXcd::Constant(1, 1, p1v);
    s.p2 = Eigen::MatrixXcd::Constant(1, 1, p2v);
    s.snr = snr;
    s.c1 = c1;
    s.c2 = c2;
    return s;
}

std::vector<ChannelSample> synthesize(const MacSystem& sys, uint64_t seed,
                                      uint64_t start_index, int count) {
    if (count < 1)
        throw std::invalid_argument("synthesize: count must be >= 1");
    const CounterRng rs1(seed, kStreamSymbols1);
    const CounterRng rs2(seed, kStreamSymbols2);
    const CounterRng rn(seed, kStreamNoise);
    const Eigen::MatrixXcd a1 = std::sqrt(sys.snr) * sys.a1();
    const Eigen::MatrixXcd a2 = std::sqrt(sys.snr) * sys.a2();
    const int nr = sys.n_r();
    const double s = std::sqrt(0.5); // unit total variance per component

    std::vector<ChannelSample> out(count);
    for (int i = 0; i < count; ++i) {
        const uint64_t idx = start_index + i;
        ChannelSample& cs = out[i];
        cs.x1 = sys.c1.points[rs1.index(idx, sys.c1.size())];
        cs.x2 = sys.c2.points[rs2.index(idx, sys.c2.size())];
        cs.noise.resize(nr);
        for (int r = 0; r < nr; ++r) {
            double re, im;
            rn.normal_pair(idx * nr + r, re, im);
            cs.noise(r) = cplx(s * re, s * im);
        }
        cs.y = a1 * cs.x1 + a2 * cs.x2 + cs.noise;
    }
    return out;
}

PowerReport power_check(const MacSystem& sys, double q1, double q2) {
    if (!(q1 > 0) || !(q2 > 0))
        throw std::invalid_argument("power_check: budgets must be positive");
    PowerReport r;
    r.trace1 = (sys.p1 * sys.p1.adjoint()).trace().real();
    r.trace2 = (sys.p2 * sys.p2.adjoint()).trace().real();
    r.feasible1 = r.trace1 <= q1 + 1e-12;
    r.feasible2 = r.trace2 <= q2 + 1e-12;
    return r;
}

} // namespace macmi
