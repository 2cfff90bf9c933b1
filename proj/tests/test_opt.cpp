#include <doctest.h>

#include <cmath>
#include <vector>

#include "macmi/opt.hpp"
#include "macmi/quadrature.hpp"
#include "macmi/rng.hpp"

using namespace macmi;

namespace {

const double kLn2 = 0.69314718055994530942;

MacSystem gaussian_template(const Eigen::MatrixXcd& h1, double snr) {
    MacSystem sys;
    sys.h1 = h1;
    sys.h2 = Eigen::MatrixXcd::Zero(h1.rows(), h1.cols());
    sys.p1 = Eigen::MatrixXcd::Identity(h1.cols(), h1.cols());
    sys.p2 = Eigen::MatrixXcd::Zero(h1.cols(), h1.cols());
    sys.snr = snr;
    sys.c1 = cartesian_power(bpsk(), int(h1.cols()));
    sys.c2 = cartesian_power(bpsk(), int(h1.cols()));
    return sys;
}

} // namespace

TEST_CASE("single active scalar user lands on the power boundary") {
    MacSystem sys = scalar_system(1, 1, 1, 0, 1.0); // user 2 silent
    SolverOptions opts;
    PrecoderSolution sol = solve_precoders(sys, 2.0, 1.0, opts);
    CHECK(sol.converged);
    CHECK(std::abs(sol.p1(0, 0)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
    CHECK(sol.p2.norm() == 0.0); // silent template user stays silent
    CHECK(sol.kkt_residual < opts.tolerance);
    CHECK(sol.nu1 > 0);
    // objective is the deterministic scalar rate at received snr 2
    CHECK(sol.objective.std_error == 0.0);
    CHECK(sol.objective.value ==
          doctest::Approx(su_mi_quad(2.0, bpsk()) / kLn2).epsilon(1e-9));
    // power feasible
    CHECK((sol.p1 * sol.p1.adjoint()).trace().real() <= 2.0 + 1e-8);
}

TEST_CASE("gaussian solver recovers waterfilling over a diagonal channel") {
    Eigen::MatrixXcd h1 = Eigen::MatrixXcd::Zero(2, 2);
    h1(0, 0) = std::sqrt(2.0);
    h1(1, 1) = 1.0;
    MacSystem sys = gaussian_template(h1, 1.0);
    SolverOptions opts;
    opts.gaussian_inputs = true;
    opts.max_iters = 300;
    opts.tolerance = 1e-6;
    PrecoderSolution sol = solve_precoders(sys, 2.0, 1.0, opts);
    // waterfilling over gains {2,1} with budget 2: powers {1.25, 0.75}
    Eigen::MatrixXcd cov = sol.p1 * sol.p1.adjoint();
    CHECK(std::abs(cov(0, 0).real() - 1.25) < 1.5e-3);
    CHECK(std::abs(cov(1, 1).real() - 0.75) < 1.5e-3);
    CHECK(std::abs(cov(0, 1)) < 1.5e-3);
    CHECK(cov.trace().real() <= 2.0 + 1e-8);
    // residual history is reported for inspection
    CHECK(sol.residual_history.size() == size_t(sol.iterations));
}

TEST_CASE("gaussian solver is basis-covariant: rotated channel, rotated cov") {
    // same singular values as the diagonal case, arbitrary right basis
    Eigen::MatrixXcd v(2, 2);
    const double c = std::cos(0.7), s = std::sin(0.7);
    v << cplx(c, 0), cplx(-s, 0.1), cplx(s, 0.1), cplx(c, 0);
    // orthonormalize the columns
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(v);
    v = qr.householderQ();
    Eigen::MatrixXcd sig = Eigen::MatrixXcd::Zero(2, 2);
    sig(0, 0) = std::sqrt(2.0);
    sig(1, 1) = 1.0;
    MacSystem sys = gaussian_template(sig * v.adjoint(), 1.0);
    SolverOptions opts;
    opts.gaussian_inputs = true;
    opts.max_iters = 300;
    opts.tolerance = 1e-6;
    PrecoderSolution sol = solve_precoders(sys, 2.0, 1.0, opts);
    Eigen::MatrixXcd want = Eigen::MatrixXcd::Zero(2, 2);
    want(0, 0) = 1.25;
    want(1, 1) = 0.75;
    want = v * want * v.adjoint();
    CHECK((sol.p1 * sol.p1.adjoint() - want).norm() < 3e-3);
}

TEST_CASE("symmetric scalar two-user problem stays symmetric") {
    MacSystem sys = scalar_system(1, 1, 1, 1, 1.0);
    SolverOptions opts;
    opts.max_iters = 80;
    PrecoderSolution sol = solve_precoders(sys, 1.0, 1.0, opts);
    // identical channels, budgets, and statistics: identical updates
    CHECK(std::abs(std::abs(sol.p1(0, 0)) - std::abs(sol.p2(0, 0))) < 1e-12);
    CHECK((sol.p1 * sol.p1.adjoint()).trace().real() <= 1.0 + 1e-8);
    CHECK((sol.p2 * sol.p2.adjoint()).trace().real() <= 1.0 + 1e-8);
    CHECK(sol.objective.value > 0);
}

TEST_CASE("solver validates budgets for active users") {
    MacSystem sys = scalar_system(1, 1, 1, 1, 1.0);
    SolverOptions opts;
    CHECK_THROWS(solve_precoders(sys, 0.0, 1.0, opts));
}

TEST_CASE("structure_decompose fixes svd conventions") {
    // identity: all factors trivial
    PrecoderStructure id = structure_decompose(Eigen::MatrixXcd::Identity(2, 2));
    CHECK((id.u - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-12);
    CHECK((id.d - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-12);
    CHECK((id.r - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-12);

    // random complex matrix: exact reconstruction and fixed phases
    CounterRng rng(13, 0);
    Eigen::MatrixXcd p(3, 3);
    uint64_t k = 0;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double a, b;
            rng.normal_pair(k++, a, b);
            p(r, c) = cplx(a, b);
        }
    PrecoderStructure st = structure_decompose(p);
    CHECK((st.u * st.d * st.r.adjoint() - p).norm() < 1e-10);
    CHECK((st.u.adjoint() * st.u - Eigen::MatrixXcd::Identity(3, 3)).norm() < 1e-10);
    CHECK((st.r.adjoint() * st.r - Eigen::MatrixXcd::Identity(3, 3)).norm() < 1e-10);
    for (int i = 0; i < 3; ++i) {
        CHECK(st.d(i, i).real() >= 0);
        CHECK(std::abs(st.d(i, i).imag()) < 1e-14);
        if (i + 1 < 3) // descending singular values
            CHECK(st.d(i, i).real() >= st.d(i + 1, i + 1).real() - 1e-12);
        // first significant entry of each right vector is real positive
        for (int r = 0; r < 3; ++r) {
            if (std::abs(st.r(r, i)) > 1e-9) {
                CHECK(st.r(r, i).real() > 0);
                CHECK(std::abs(st.r(r, i).imag()) < 1e-10);
                break;
            }
        }
    }
}

TEST_CASE("two-user power allocation: strong user binds, weak user backs off") {
    SolverOptions opts;
    opts.tolerance = 1e-5;
    opts.max_iters = 200;
    PowerAllocation pa = solve_power_allocation(
        {cplx(1, 0)}, {cplx(0.7, 0)}, 1.0, 2.0, 10.0, bpsk(), bpsk(), opts);
    REQUIRE(pa.powers1.size() == 1);
    REQUIRE(pa.powers2.size() == 1);
    CHECK(pa.converged);
    CHECK(pa.powers1[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(pa.powers2[0] == doctest::Approx(0.58776).epsilon(5e-3));
    CHECK(pa.powers2[0] < 2.0 - 0.5); // strictly inside the budget
    CHECK(pa.kkt_residual <= opts.tolerance);
}

TEST_CASE("power allocation respects budgets and nonnegativity") {
    SolverOptions opts;
    opts.max_iters = 120;
    PowerAllocation pa = solve_power_allocation(
        {cplx(1, 0), cplx(0.4, 0.3)}, {cplx(0.8, 0), cplx(0.2, -0.5)}, 1.5,
        0.8, 2.0, bpsk(), bpsk(), opts);
    double s1 = 0, s2 = 0;
    for (double p : pa.powers1) {
        CHECK(p >= 0);
        s1 += p;
    }
    for (double p : pa.powers2) {
        CHECK(p >= 0);
        s2 += p;
    }
    CHECK(s1 <= 1.5 + 1e-8);
    CHECK(s2 <= 0.8 + 1e-8);
    // `iterations` indexes the last completed pass; the history gets one
    // entry per pass including the final one
    CHECK(pa.residual_history.size() == size_t(pa.iterations) + 1);
}

TEST_CASE("gaussian power allocation reduces toward waterfilling") {
    SolverOptions opts;
    opts.gaussian_inputs = true;
    opts.max_iters = 400;
    opts.tolerance = 1e-7;
    PowerAllocation pa = solve_power_allocation(
        {cplx(1, 0), cplx(0.5, 0)}, {cplx(0, 0), cplx(0, 0)}, 4.0, 0.0, 1.0,
        bpsk(), bpsk(), opts);
    PowerAllocation wf = waterfilling({1.0, 0.25}, 4.0, 1.0);
    REQUIRE(wf.powers1.size() == 2);
    CHECK(wf.powers1[0] == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(wf.powers1[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(pa.powers1[0] - 3.5) < 1e-3);
    CHECK(std::abs(pa.powers1[1] - 0.5) < 1e-3);
    // inactive second user reports zero powers
    for (double p : pa.powers2)
        CHECK(p == 0.0);
}

TEST_CASE("gaussian mercury equals closed-form waterfilling") {
    const std::vector<double> gains = {1.3, 0.9, 0.5, 0.2};
    const double budget = 3.0, snr = 1.2;
    PowerAllocation m = mercury_waterfilling_gaussian(gains, budget, snr);
    PowerAllocation w = waterfilling(gains, budget, snr);
    REQUIRE(m.powers1.size() == 4);
    double tot = 0;
    for (size_t j = 0; j < 4; ++j) {
        CHECK(std::abs(m.powers1[j] - w.powers1[j]) < 1e-6);
        tot += m.powers1[j];
    }
    CHECK(tot == doctest::Approx(budget).epsilon(1e-9));
    CHECK(m.converged);
    // a channel below the water level gets nothing in both
    PowerAllocation deep = waterfilling({1.0, 0.01}, 0.5, 1.0);
    CHECK(deep.powers1[1] == 0.0);
    PowerAllocation mdeep = mercury_waterfilling_gaussian({1.0, 0.01}, 0.5, 1.0);
    CHECK(mdeep.powers1[1] < 1e-12);
}

TEST_CASE("bpsk mercury splits power at the scalar-rate optimum") {
    const std::vector<double> gains = {1.0, 0.25};
    const double budget = 1.0, snr = 10.0;
    PowerAllocation m = mercury_waterfilling(gains, budget, snr, bpsk());
    REQUIRE(m.powers1.size() == 2);
    CHECK(m.converged);
    CHECK(m.powers1[0] + m.powers1[1] == doctest::Approx(budget).epsilon(1e-9));

    // brute-force rate oracle over the simplex
    auto rate = [&](double p0) {
        return su_mi_quad(snr * gains[0] * p0, bpsk()) +
               su_mi_quad(snr * gains[1] * (budget - p0), bpsk());
    };
    double lo = 0.0, hi = 1.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    double fa = rate(a), fb = rate(b);
    for (int it = 0; it < 80; ++it) {
        if (fa < fb) {
            lo = a;
            a = b;
            fa = fb;
            b = lo + gr * (hi - lo);
            fb = rate(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - gr * (hi - lo);
            fa = rate(a);
        }
    }
    const double best = 0.5 * (lo + hi);
    CHECK(std::abs(m.powers1[0] - best) < 2e-3);
    // finite alphabets put more power on the weak channel than waterfilling
    PowerAllocation w = waterfilling(gains, budget, snr);
    CHECK(m.powers1[1] > w.powers1[1]);
}

TEST_CASE("mercury degenerate branches") {
    PowerAllocation zero = mercury_waterfilling({1.0, 2.0}, 0.0, 1.0, bpsk());
    CHECK(zero.converged);
    CHECK(zero.powers1[0] == 0.0);
    CHECK(zero.powers1[1] == 0.0);
    PowerAllocation dead = mercury_waterfilling({0.0, 0.0}, 1.0, 1.0, bpsk());
    CHECK_FALSE(dead.converged);
    CHECK(dead.kkt_residual == doctest::Approx(1.0));
    CHECK_THROWS(mercury_waterfilling({}, 1.0, 1.0, bpsk()));
    CHECK_THROWS(mercury_waterfilling({1.0}, -1.0, 1.0, bpsk()));
    // single channel absorbs the whole budget
    PowerAllocation one = mercury_waterfilling({0.8}, 2.0, 1.0, bpsk());
    CHECK(one.powers1[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("low snr covariance aligns with the channel eigenbasis") {
    Eigen::MatrixXcd h1 = Eigen::MatrixXcd::Zero(2, 2);
    h1(0, 0) = std::sqrt(2.0);
    h1(1, 1) = 1.0;
    MacSystem sys = gaussian_template(h1, 1e-3);
    sys.h2 = h1; // both users see the same channel
    sys.p2 = Eigen::MatrixXcd::Identity(2, 2);
    auto [z1, z2] = low_snr_precoder(sys, 3.0, 1.0);
    // eigenvalue weighting: budget split 2:1 across the eigendirections
    CHECK(std::abs(z1(0, 0).real() - 2.0) < 1e-12);
    CHECK(std::abs(z1(1, 1).real() - 1.0) < 1e-12);
    CHECK(std::abs(z1(0, 1)) < 1e-12);
    CHECK(z1.trace().real() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(z2.trace().real() == doctest::Approx(1.0).epsilon(1e-12));

    // isotropic channel: uniform covariance
    MacSystem iso = gaussian_template(Eigen::MatrixXcd::Identity(2, 2), 1e-3);
    auto [zi, zi2] = low_snr_precoder(iso, 2.0, 1.0);
    CHECK((zi - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-12);
    CHECK(zi2.norm() == 0.0); // zero channel for the silent user

    // the aligned covariance maximizes the leading rate coefficient
    Eigen::MatrixXcd skew(2, 2);
    skew << cplx(1.2, 0.3), cplx(0.4, -0.2), cplx(0.1, 0.5), cplx(0.3, 0);
    MacSystem gen = gaussian_template(skew, 1e-3);
    auto [zg, zg2] = low_snr_precoder(gen, 2.0, 1.0);
    const double aligned = (skew * zg * skew.adjoint()).trace().real();
    const double iso_rate =
        (skew * skew.adjoint()).trace().real(); // q/nt * tr = 1 * tr
    CHECK(aligned >= iso_rate - 1e-12);
}
