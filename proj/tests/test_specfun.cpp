#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <hcb/specfun.hpp>

#include "oracles.hpp"

namespace {
// Reference values frozen from the independent long-double series / quadrature
// oracles in oracles.hpp (and cross-checked against standard tables).
constexpr double kJ0at1 = 0.7651976865579666;
constexpr double kJ1at1 = 0.4400505857449335;
constexpr double kY0at1 = 0.0882569642156770;
constexpr double kY1at1 = -0.7812128213002887;
constexpr double kE1at1 = 0.2193839343955203;
}  // namespace

TEST_CASE("bessel_jy near zero argument", "[specfun]") {
    const auto t = hcb::bessel_jy(2, 1e-12);
    CHECK(t.J(0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(std::abs(t.J(1)) < 1e-12);
    CHECK(t.Y(0) < -15.0);  // log singularity
}

TEST_CASE("bessel_jy matches frozen references at z = 1", "[specfun]") {
    const auto t = hcb::bessel_jy(1, 1.0);
    CHECK(t.J(0) == Catch::Approx(kJ0at1).margin(2e-15));
    CHECK(t.J(1) == Catch::Approx(kJ1at1).margin(2e-15));
    CHECK(t.Y(0) == Catch::Approx(kY0at1).margin(2e-15));
    CHECK(t.Y(1) == Catch::Approx(kY1at1).margin(2e-15));
}

TEST_CASE("bessel_jy agrees with the power-series oracle", "[specfun]") {
    for (double z : {0.05, 0.3, 1.0, 2.7, 8.0, 12.0}) {
        const auto t = hcb::bessel_jy(12, z);
        for (int n = 0; n <= 12; ++n) {
            const double ref = oracle::bessel_j_series(n, z);
            CHECK_THAT(t.J(n), Catch::Matchers::WithinAbs(ref, 1e-12 * std::max(1.0, std::abs(ref))));
        }
        for (int n : {0, 1, 2, 5, 8}) {
            const double ref = oracle::bessel_y_series(n, z);
            CHECK_THAT(t.Y(n), Catch::Matchers::WithinAbs(ref, 1e-12 * std::max(1.0, std::abs(ref))));
        }
    }
    // Just past the internal series/asymptotic switch.
    const auto t = hcb::bessel_jy(2, 17.1);
    for (int n = 0; n <= 2; ++n) {
        CHECK_THAT(t.J(n), Catch::Matchers::WithinAbs(oracle::bessel_j_series(n, 17.1), 2e-12));
        CHECK_THAT(t.Y(n), Catch::Matchers::WithinAbs(oracle::bessel_y_series(n, 17.1), 2e-12));
    }
}

TEST_CASE("cylinder Wronskian holds across the full argument range", "[specfun]") {
    const double twoOverPi = 2.0 / std::numbers::pi;
    for (double z : {0.01, 0.2, 1.0, 5.0, 16.9, 17.1, 60.0, 300.0, 1e3, 1e4}) {
        const int maxOrder = z < 1.0 ? 12 : 40;
        const auto t = hcb::bessel_jy(maxOrder, z);
        for (int n = 0; n < maxOrder; ++n) {
            const double w = t.J(n) * t.dY(n) - t.dJ(n) * t.Y(n);
            CHECK(w == Catch::Approx(twoOverPi / z).epsilon(1e-11));
        }
    }
}

TEST_CASE("negative orders and derivative identities", "[specfun]") {
    const auto t = hcb::bessel_jy(5, 2.5);
    CHECK(t.J(-3) == -t.J(3));
    CHECK(t.J(-2) == t.J(2));
    CHECK(t.Y(-3) == -t.Y(3));
    CHECK(t.Y(-2) == t.Y(2));
    CHECK(t.dJ(0) == -t.J(1));
    CHECK(t.dY(0) == -t.Y(1));
}

TEST_CASE("bessel_jy rejects out-of-domain arguments", "[specfun]") {
    CHECK_THROWS_AS(hcb::bessel_jy(3, 0.0), std::domain_error);
    CHECK_THROWS_AS(hcb::bessel_jy(3, -1.0), std::domain_error);
    CHECK_THROWS_AS(hcb::bessel_jy(3, 1.0001e4), std::domain_error);
    CHECK_THROWS_AS(hcb::bessel_jy(-1, 1.0), std::domain_error);
    CHECK_THROWS_AS(hcb::bessel_jy(129, 1.0), std::domain_error);
    CHECK_THROWS_AS(hcb::bessel_jy(128, 1e-3), std::range_error);
}

TEST_CASE("hankel1 composition and Wronskian", "[specfun]") {
    const auto h = hcb::hankel1(0, 1.0);
    CHECK(h.real() == Catch::Approx(kJ0at1).margin(2e-15));
    CHECK(h.imag() == Catch::Approx(kY0at1).margin(2e-15));

    // Imaginary part is Y by construction (bitwise; Y does not depend on the
    // table order). The real part may differ at ulp level between tables of
    // different maxOrder because the downward-recurrence start index moves.
    for (double z : {0.4, 3.0, 21.0}) {
        const auto t = hcb::bessel_jy(4, z);
        for (int n = 0; n <= 4; ++n) {
            const auto hn = hcb::hankel1(n, z);
            CHECK_THAT(hn.real(), Catch::Matchers::WithinAbs(t.J(n), 1e-14));
            CHECK(hn.imag() == t.Y(n));
        }
    }

    // J_n H_n' - J_n' H_n = 2i/(pi z).
    using cd = std::complex<double>;
    for (double z : {0.15, 1.0, 9.0, 123.0}) {
        const auto t = hcb::bessel_jy(8, z);
        for (int n = 0; n < 8; ++n) {
            const cd hn(t.J(n), t.Y(n));
            const cd dhn(t.dJ(n), t.dY(n));
            const cd w = t.J(n) * dhn - t.dJ(n) * hn;
            const cd ref(0.0, 2.0 / (std::numbers::pi * z));
            CHECK(std::abs(w - ref) < 1e-11 * std::abs(ref));
        }
    }
}

TEST_CASE("expint_en matches the quadrature oracle", "[specfun]") {
    CHECK(hcb::expint_en(1, 1.0) == Catch::Approx(kE1at1).margin(2e-15));
    for (double x : {0.1, 0.5, 1.0, 1.5, 2.5, 6.0, 30.0}) {
        const double ref = oracle::expint1_quadrature(x);
        CHECK_THAT(hcb::expint_en(1, x), Catch::Matchers::WithinRel(ref, 1e-13));
    }
}

TEST_CASE("expint_en satisfies the order recurrence", "[specfun]") {
    for (double x : {0.5, 3.0}) {
        const double ex = std::exp(-x);
        for (int n = 1; n <= 8; ++n) {
            const double lhs = hcb::expint_en(n + 1, x);
            const double rhs = (ex - x * hcb::expint_en(n, x)) / n;
            CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
        }
    }
    // Monotone decreasing in the order for fixed argument.
    CHECK(hcb::expint_en(3, 2.0) < hcb::expint_en(2, 2.0));
    CHECK(hcb::expint_en(2, 2.0) < hcb::expint_en(1, 2.0));
}

TEST_CASE("expint_en domain errors", "[specfun]") {
    CHECK_THROWS_AS(hcb::expint_en(0, 1.0), std::domain_error);
    CHECK_THROWS_AS(hcb::expint_en(1, 0.0), std::domain_error);
    CHECK_THROWS_AS(hcb::expint_en(1, -2.0), std::domain_error);
}

TEST_CASE("expint_sequence agrees with per-order evaluation", "[specfun]") {
    // The upward recurrence carries absolute error on the scale 1e-16 e^{-x},
    // amplified by x/j at each step; compare against that scale rather than
    // demanding pure relative agreement for the tiny large-x values.
    for (double x : {0.3, 2.0, 10.0}) {
        double seq[12];
        hcb::expint_sequence(12, x, seq);
        for (int n = 1; n <= 12; ++n) {
            const double ref = hcb::expint_en(n, x);
            const double tol = 1e-12 * std::max(std::abs(ref), std::exp(-x));
            CHECK_THAT(seq[n - 1], Catch::Matchers::WithinAbs(ref, tol));
        }
    }
}

TEST_CASE("ein matches its series and the E1 connection", "[specfun]") {
    CHECK_THAT(hcb::ein(1.0), Catch::Matchers::WithinRel(oracle::ein_series(1.0), 1e-14));
    CHECK_THAT(hcb::ein(-3.8), Catch::Matchers::WithinRel(oracle::ein_series(-3.8), 1e-13));
    CHECK_THAT(hcb::ein(9.0), Catch::Matchers::WithinRel(oracle::ein_series(9.0), 1e-13));
    const double viaE1 = hcb::euler_gamma + std::log(3.0) + hcb::expint_en(1, 3.0);
    CHECK(hcb::ein(3.0) == Catch::Approx(viaE1).epsilon(1e-13));
    CHECK(hcb::ein(0.0) == 0.0);
    CHECK_THROWS_AS(hcb::ein(-50.0), std::domain_error);
}

TEST_CASE("erfc endpoints", "[specfun]") {
    CHECK(hcb::erfc(0.0) == 1.0);
    CHECK(hcb::erfc(1.0) == Catch::Approx(0.15729920705028513).margin(1e-15));
    CHECK(hcb::erfc(-1.0) + hcb::erfc(1.0) == Catch::Approx(2.0).margin(1e-15));
}
