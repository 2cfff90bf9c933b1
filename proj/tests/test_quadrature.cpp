#include <doctest.h>

#include <cmath>

#include "macmi/quadrature.hpp"
#include "macmi/system.hpp"

using namespace macmi;

namespace {
const double kSqrtPi = 1.7724538509055160273;
}

TEST_CASE("gauss_hermite reproduces the e^{-t^2} moments exactly") {
    for (int n : {2, 5, 16, 64}) {
        HermiteRule r = gauss_hermite(n);
        REQUIRE(int(r.nodes.size()) == n);
        REQUIRE(int(r.weights.size()) == n);
        // nodes strictly ascending and sign-symmetric, weights positive
        for (int i = 1; i < n; ++i)
            CHECK(r.nodes[i] > r.nodes[i - 1]);
        for (int i = 0; i < n; ++i) {
            CHECK(r.weights[i] > 0);
            CHECK(std::abs(r.nodes[i] + r.nodes[n - 1 - i]) < 1e-12);
        }
        // integral of t^k e^{-t^2}: sqrt(pi) * (k-1)!! / 2^{k/2} for even k
        double want[5] = {kSqrtPi, kSqrtPi / 2, 3 * kSqrtPi / 4,
                          15 * kSqrtPi / 8, 105 * kSqrtPi / 16};
        int kmax = std::min(2 * n - 1, 9);
        for (int k = 0; k <= kmax; ++k) {
            double s = 0;
            for (int i = 0; i < n; ++i)
                s += r.weights[i] * std::pow(r.nodes[i], k);
            if (k % 2 == 1)
                CHECK(std::abs(s) < 1e-10);
            else
                CHECK(s == doctest::Approx(want[k / 2]).epsilon(1e-12));
        }
    }
}

TEST_CASE("single-user scalar mmse/mi match converged reference digits") {
    Constellation c = bpsk();
    // digits from a 192-node reference, stable to ~3e-10 at these snrs
    CHECK(su_mmse_quad(0.5, c) == doctest::Approx(0.4495995092066725).epsilon(1e-8));
    CHECK(su_mmse_quad(1.0, c) == doctest::Approx(0.2310182219273612).epsilon(1e-8));
    CHECK(su_mmse_quad(2.0, c) == doctest::Approx(0.0685974106917538).epsilon(1e-7));
    CHECK(su_mi_quad(0.5, c) == doctest::Approx(0.3368308203468317).epsilon(1e-8));
    CHECK(su_mi_quad(1.0, c) == doctest::Approx(0.5000721360668394).epsilon(1e-8));
}

TEST_CASE("bpsk mmse agrees with its closed tanh form") {
    // for antipodal inputs the posterior mean is a tanh, so
    // mmse(snr) = 1 - E[tanh(2 snr + sqrt(2 snr) n)], n ~ N(0,1)
    Constellation c = bpsk();
    HermiteRule r = gauss_hermite(192);
    for (double snr : {0.25, 1.0, 3.0}) {
        const double g = 2.0 * snr;
        double e = 0;
        for (size_t i = 0; i < r.nodes.size(); ++i)
            e += r.weights[i] *
                 std::tanh(g + std::sqrt(2.0 * g) * r.nodes[i]);
        e = 1.0 - e / kSqrtPi;
        CHECK(su_mmse_quad(snr, c) == doctest::Approx(e).epsilon(1e-6));
    }
}

TEST_CASE("scalar mmse curve is strictly decreasing in snr") {
    Constellation c = bpsk();
    double prev = 1.0; // mmse(0) = input power
    for (double snr = 0.1; snr < 8.0; snr *= 1.6) {
        double m = su_mmse_quad(snr, c);
        CHECK(m < prev);
        CHECK(m > 0);
        prev = m;
    }
}

TEST_CASE("two-user quadrature statistics match frozen reference digits") {
    // co-phased BPSK, h = p = 1, snr = 1
    MacSystem coph = scalar_system(1, 1, 1, 1, 1.0);
    PosteriorStats st = posterior_stats_quad(coph);
    CHECK(st.mi == doctest::Approx(0.7698347635738791).epsilon(1e-8));
    CHECK(st.e1(0, 0).real() == doctest::Approx(0.5804158557744801).epsilon(1e-7));
    CHECK(st.e2(0, 0).real() == doctest::Approx(0.5804158557744801).epsilon(1e-7));
    CHECK(st.cross12(0, 0).real() == doctest::Approx(0.4195841442255194).epsilon(1e-7));
    CHECK(std::abs(st.cross12(0, 0).imag()) < 1e-10);
    CHECK(st.mmse_total == doctest::Approx(1.1608317115489601).epsilon(1e-7));
    CHECK(st.psi_oracle == doctest::Approx(-0.8391682884510387).epsilon(1e-7));
    // cross21 is the adjoint statistic
    CHECK(std::abs(st.cross21(0, 0) - std::conj(st.cross12(0, 0))) < 1e-12);

    // orthogonal interferer h2 = j: users decouple, psi vanishes
    MacSystem orth = scalar_system(1, 1, cplx(0, 1), 1, 1.0);
    PosteriorStats so = posterior_stats_quad(orth);
    CHECK(so.mi == doctest::Approx(1.0001442721336788).epsilon(1e-8));
    CHECK(so.e1(0, 0).real() == doctest::Approx(0.2310182219273612).epsilon(1e-7));
    CHECK(so.e2(0, 0).real() == doctest::Approx(0.2310182219273612).epsilon(1e-7));
    CHECK(std::abs(so.cross12(0, 0)) < 1e-10);
    CHECK(std::abs(so.psi_oracle) < 1e-10);

    // asymmetric gains/powers with a complex interferer channel
    MacSystem asym =
        scalar_system(1.0, 1.2, cplx(0.6, 0.3), 0.9, 1.7);
    PosteriorStats sa = posterior_stats_quad(asym);
    CHECK(sa.mi == doctest::Approx(0.9606906919133114).epsilon(1e-8));
    CHECK(sa.e1(0, 0).real() == doctest::Approx(0.1417793932541093).epsilon(1e-7));
    CHECK(sa.e2(0, 0).real() == doctest::Approx(0.4979849122193408).epsilon(1e-7));
    CHECK(sa.cross12(0, 0).real() == doctest::Approx(0.1275115055511872).epsilon(1e-7));
    CHECK(sa.mmse_total == doctest::Approx(0.3856778267898672).epsilon(1e-7));
    CHECK(sa.psi_oracle == doctest::Approx(-0.16525491119433866).epsilon(1e-7));
    // the two-trace correction form is purely imaginary by construction
    CHECK(std::abs(sa.psi_paper.real()) < 1e-12);
    CHECK(sa.psi_paper.imag() == doctest::Approx(-0.08262745559716933).epsilon(1e-7));
}

TEST_CASE("mi_quad equals the statistics-path mi") {
    MacSystem sys = scalar_system(0.8, 1.1, cplx(0.2, 0.9), 0.7, 1.3);
    CHECK(mi_quad(sys) == doctest::Approx(posterior_stats_quad(sys).mi).epsilon(1e-12));
}

TEST_CASE("quadrature node count converges from the default upward") {
    // doubling the grid beyond the default must not move low-snr results
    MacSystem sys = scalar_system(1, 1, 1, 1, 2.0);
    double d = mi_quad(sys, 128);
    double f = mi_quad(sys, 256);
    CHECK(std::abs(d - f) < 1e-9);
}

TEST_CASE("degenerate second user reduces to the single-user curve") {
    MacSystem sys = scalar_system(1, 1, 1, 0, 1.0); // p2 = 0
    CHECK(mi_quad(sys) == doctest::Approx(su_mi_quad(1.0, bpsk())).epsilon(1e-10));
    PosteriorStats st = posterior_stats_quad(sys);
    CHECK(st.mmse_total == doctest::Approx(su_mmse_quad(1.0, bpsk())).epsilon(1e-10));
    CHECK(std::abs(st.psi_oracle) < 1e-12);
}
