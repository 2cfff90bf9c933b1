#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "macmi/constellation.hpp"

using namespace macmi;

namespace {

void check_unit_power_zero_mean(const Constellation& c) {
    c.validate();
    CHECK(c.mean().norm() < 1e-12);
    Eigen::MatrixXcd cov = c.covariance();
    CHECK((cov - Eigen::MatrixXcd::Identity(c.dim(), c.dim())).norm() < 1e-12);
}

} // namespace

TEST_CASE("bpsk is the unit antipodal pair") {
    Constellation c = bpsk();
    REQUIRE(c.size() == 2);
    REQUIRE(c.dim() == 1);
    CHECK(c.points[0](0) == cplx(1, 0));
    CHECK(c.points[1](0) == cplx(-1, 0));
    CHECK(c.probs[0] == doctest::Approx(0.5));
    CHECK(c.probs[1] == doctest::Approx(0.5));
    check_unit_power_zero_mean(c);
}

TEST_CASE("square qam sizes, unit energy, zero mean") {
    for (int m : {4, 16, 64}) {
        Constellation c = qam(m);
        REQUIRE(c.size() == m);
        REQUIRE(c.dim() == 1);
        check_unit_power_zero_mean(c);
        // all points distinct
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j)
                CHECK(std::abs(c.points[i](0) - c.points[j](0)) > 1e-9);
    }
    CHECK_THROWS_AS(qam(8), std::invalid_argument);
    CHECK_THROWS_AS(qam(0), std::invalid_argument);
}

TEST_CASE("constellation_by_name resolves the documented names") {
    CHECK(constellation_by_name("bpsk").size() == 2);
    CHECK(constellation_by_name("qpsk").size() == 4);
    CHECK(constellation_by_name("qam16").size() == 16);
    CHECK(constellation_by_name("qam64").size() == 64);
    CHECK_THROWS_AS(constellation_by_name("psk8"), std::invalid_argument);
}

TEST_CASE("cartesian_power lifts a scalar alphabet to n dimensions") {
    Constellation c = cartesian_power(bpsk(), 2);
    REQUIRE(c.size() == 4);
    REQUIRE(c.dim() == 2);
    check_unit_power_zero_mean(c); // covariance is I_2: unit power per dim
    // lexicographic: first coordinate is the outer index
    CHECK(c.points[0](0) == cplx(1, 0));
    CHECK(c.points[0](1) == cplx(1, 0));
    CHECK(c.points[1](0) == cplx(1, 0));
    CHECK(c.points[1](1) == cplx(-1, 0));
    CHECK(c.points[3](0) == cplx(-1, 0));
    CHECK(c.points[3](1) == cplx(-1, 0));
    Constellation q = cartesian_power(qam(4), 3);
    CHECK(q.size() == 64);
    CHECK(q.dim() == 3);
    check_unit_power_zero_mean(q);
}

TEST_CASE("joint product enumerates pairs lexicographically") {
    JointAlphabet j = product(bpsk(), qam(4));
    REQUIRE(j.size1 == 2);
    REQUIRE(j.size2 == 4);
    REQUIRE(int(j.pairs.size()) == 8);
    double total = 0;
    for (int k = 0; k < 8; ++k) {
        const JointPair& p = j.pairs[k];
        CHECK(p.i1 == k / 4);
        CHECK(p.i2 == k % 4);
        CHECK(p.prob == doctest::Approx(0.125));
        CHECK((p.x1 - bpsk().points[p.i1]).norm() == 0.0);
        CHECK((p.x2 - qam(4).points[p.i2]).norm() == 0.0);
        total += p.prob;
    }
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("validate rejects broken alphabets") {
    Constellation c = bpsk();
    c.probs[0] = 0.9; // sums to 1.4
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    Constellation d = bpsk();
    d.points[1] = Eigen::VectorXcd::Constant(1, cplx(1, 0)); // mean != 0
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);

    Constellation e = bpsk();
    e.points[0] *= 2.0; // power != 1 (and mean shifted)
    CHECK_THROWS_AS(e.validate(), std::invalid_argument);

    Constellation f = bpsk();
    f.probs.pop_back(); // length mismatch
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
}
