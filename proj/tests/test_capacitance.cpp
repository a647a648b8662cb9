#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

#include <hcb/capacitance.hpp>
#include "oracles.hpp"

using hcb::BlochVector;
using hcb::CrystalConfig;
using hcb::TruncationParams;
using hcb::Vec2;

namespace {

const hcb::LatticeGeometry& geom() {
    static const auto g = hcb::build_geometry(2.0 * std::numbers::sqrt3);
    return g;
}

const CrystalConfig& dilute() {
    static const CrystalConfig c{};
    return c;
}

const TruncationParams& dilute_trunc() {
    static const auto t = hcb::auto_truncation(dilute());
    return t;
}

// Frozen references from the point-collocation solver in oracles.hpp: matrix
// solves at 256 nodes (512-node runs agree to 1e-15), gradient by Richardson
// central differences of the collocation capacitance at 192 nodes. All for
// radius 1/50 on the standard hexagonal geometry.
constexpr double kGoldenC11AtK = 1.37030629084532;
constexpr double kGoldenC11Generic = 1.29575377987972;           // alpha = (0.7, 0.31)
constexpr std::complex<double> kGoldenC12Generic{-0.0249112117120003, 0.182503733244939};
constexpr double kGoldenC11AtM = 1.34562649572774;
constexpr double kGoldenC12AtM = -0.0788785109071556;            // real at this point
constexpr std::complex<double> kGoldenGradient{0.0, -0.269020299455};

Vec2 random_momentum(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const auto& g = geom();
    for (;;) {
        const Vec2 a = u(rng) * g.alpha1 + u(rng) * g.alpha2;
        if (hcb::distance_to_dual_lattice(g, a) > 0.05 * hcb::norm(g.alpha1)) return a;
    }
}

}  // namespace

TEST_CASE("capacitance matches the frozen collocation references", "[capacitance]") {
    const auto sp = hcb::symmetry_points(geom());

    const auto cK = hcb::capacitance(geom(), dilute(), dilute_trunc(), sp.k);
    CHECK(std::abs(cK(0, 0).real() - kGoldenC11AtK) < 1e-9 * kGoldenC11AtK);
    CHECK(std::abs(cK(0, 0).imag()) < 1e-12);
    CHECK(std::abs(cK(0, 1)) < 1e-8 * kGoldenC11AtK);  // mean modes decouple here

    const auto cG =
        hcb::capacitance(geom(), dilute(), dilute_trunc(), BlochVector{{0.7, 0.31}});
    CHECK(std::abs(cG(0, 0).real() - kGoldenC11Generic) < 1e-9 * kGoldenC11Generic);
    CHECK(std::abs(cG(0, 1) - kGoldenC12Generic) < 1e-9);

    const auto cM = hcb::capacitance(geom(), dilute(), dilute_trunc(), sp.m);
    CHECK(std::abs(cM(0, 0).real() - kGoldenC11AtM) < 1e-9 * kGoldenC11AtM);
    CHECK(std::abs(cM(0, 1) - std::complex<double>{kGoldenC12AtM, 0.0}) < 1e-9);
}

TEST_CASE("capacitance agrees with a live collocation solve", "[capacitance]") {
    const BlochVector alpha{{0.45, -0.2}};
    const auto lib = hcb::capacitance(geom(), dilute(), dilute_trunc(), alpha);
    const auto ev = hcb::make_evaluator(geom(), alpha, 0.0);
    const auto ref = oracle::NystromStatic(geom(), ev, dilute().radius, 96).capacitance();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(lib(i, j) - ref(i, j)) < 1e-8 * std::abs(ref(0, 0)));
}

TEST_CASE("capacitance is Hermitian with equal real diagonals", "[capacitance]") {
    std::mt19937 rng(911);
    const CrystalConfig packed{0.2, 1e-3, 1.0, 1.0};
    const auto packedTrunc = hcb::auto_truncation(packed);

    auto check_structure = [](const Eigen::Matrix2cd& c, double tolScale) {
        const double scale = std::abs(c(0, 0));
        CHECK(c(0, 0).real() > 0.0);
        CHECK(std::abs(c(0, 0).imag()) < tolScale * scale);
        CHECK(std::abs(c(0, 0) - c(1, 1)) < 1e-9 * scale);
        CHECK(std::abs(c(0, 1) - std::conj(c(1, 0))) < 1e-10 * scale);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(0.5 * (c + c.adjoint()));
        CHECK(es.eigenvalues().minCoeff() > 0.0);
    };

    for (int trial = 0; trial < 12; ++trial) {
        const Vec2 a = random_momentum(rng);
        INFO("dilute alpha = (" << a.x << ", " << a.y << ")");
        check_structure(hcb::capacitance(geom(), dilute(), dilute_trunc(), BlochVector{a}),
                        1e-12);
    }
    for (int trial = 0; trial < 4; ++trial) {
        const Vec2 a = random_momentum(rng);
        INFO("packed alpha = (" << a.x << ", " << a.y << ")");
        check_structure(hcb::capacitance(geom(), packed, packedTrunc, BlochVector{a}), 1e-12);
    }
}

TEST_CASE("capacitance respects momentum reflection and dual shifts", "[capacitance]") {
    const Vec2 a{0.52, 0.17};
    const auto c = hcb::capacitance(geom(), dilute(), dilute_trunc(), BlochVector{a});
    const auto cNeg =
        hcb::capacitance(geom(), dilute(), dilute_trunc(), BlochVector{-1.0 * a});
    CHECK(std::abs(cNeg(0, 1) - std::conj(c(0, 1))) < 1e-10);
    CHECK(std::abs(cNeg(0, 0) - std::conj(c(0, 0))) < 1e-10);

    const auto cShift = hcb::capacitance(geom(), dilute(), dilute_trunc(),
                                         BlochVector{a + geom().alpha2});
    CHECK(std::abs(cShift(0, 0) - c(0, 0)) < 1e-10);
    CHECK(std::abs(cShift(0, 1) - c(0, 1)) < 1e-10);
}

TEST_CASE("asymptotic bands follow the eigenvalues of the capacitance",
          "[capacitance]") {
    const Vec2 a{0.7, 0.31};
    const auto c = hcb::capacitance(geom(), dilute(), dilute_trunc(), BlochVector{a});
    const auto bands = hcb::asymptotic_bands(geom(), dilute(), dilute_trunc(), BlochVector{a});
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(0.5 * (c + c.adjoint()));
    const double scale =
        dilute().delta / (std::numbers::pi * dilute().radius * dilute().radius);
    for (int j = 0; j < 2; ++j) {
        const double expected = dilute().vb * std::sqrt(scale * es.eigenvalues()(j));
        CHECK(std::abs(bands[j] - expected) < 1e-10);
    }
    CHECK(bands[0] < bands[1]);
}

TEST_CASE("asymptotic bands are degenerate at the corner", "[capacitance]") {
    const auto sp = hcb::symmetry_points(geom());
    const auto bands = hcb::asymptotic_bands(geom(), dilute(), dilute_trunc(), sp.k);
    CHECK(std::abs(bands[1] - bands[0]) < 1e-8 * bands[0]);
    const double expected =
        dilute().vb * std::sqrt(dilute().delta * kGoldenC11AtK /
                                (std::numbers::pi * dilute().radius * dilute().radius));
    CHECK(std::abs(bands[0] - expected) < 1e-8 * expected);
}

TEST_CASE("asymptotic splitting at the edge midpoint matches the references",
          "[capacitance]") {
    const auto sp = hcb::symmetry_points(geom());
    const auto bands = hcb::asymptotic_bands(geom(), dilute(), dilute_trunc(), sp.m);
    const double scale =
        dilute().delta / (std::numbers::pi * dilute().radius * dilute().radius);
    const double lo = dilute().vb * std::sqrt(scale * (kGoldenC11AtM - (-kGoldenC12AtM)));
    const double hi = dilute().vb * std::sqrt(scale * (kGoldenC11AtM + (-kGoldenC12AtM)));
    CHECK(std::abs(bands[0] - lo) < 1e-8 * lo);
    CHECK(std::abs(bands[1] - hi) < 1e-8 * hi);
}

TEST_CASE("rotation identities hold for the capacitance entries", "[capacitance]") {
    const auto rGeneric = hcb::rotation_covariance_residual(geom(), dilute(), dilute_trunc(),
                                                            BlochVector{{0.7, 0.31}});
    CHECK(rGeneric.first < 1e-8);
    CHECK(rGeneric.second < 1e-8);

    const auto sp = hcb::symmetry_points(geom());
    const auto rCorner =
        hcb::rotation_covariance_residual(geom(), dilute(), dilute_trunc(), sp.k);
    CHECK(rCorner.first < 1e-8);
    CHECK(rCorner.second < 1e-8);

    // Single rotation shifts c12 by the other primitive phase.
    const Vec2 a{0.52, 0.17};
    const auto c0 = hcb::capacitance(geom(), dilute(), dilute_trunc(), BlochVector{a});
    const auto c1 = hcb::capacitance(geom(), dilute(), dilute_trunc(),
                                     hcb::rotate_dual(geom(), BlochVector{a}));
    const auto phase = std::polar(1.0, hcb::dot(a, geom().l2));
    CHECK(std::abs(c1(0, 1) - phase * c0(0, 1)) < 1e-10);
}

TEST_CASE("corner gradient of c12 matches the frozen reference", "[capacitance]") {
    const auto dg = hcb::dirac_gradient_c(geom(), dilute(), dilute_trunc());
    CHECK(std::abs(dg.c - kGoldenGradient) < 1e-9);
    CHECK(dg.antiResidual < 1e-5 * std::abs(dg.c));
    CHECK(dg.c11Gradient < 1e-6 * kGoldenC11AtK);
    CHECK(dg.stepError < 1e-5 * std::abs(dg.c));
    CHECK(std::abs(dg.c) > 0.0);

    // Explicit step within range reproduces the default.
    const auto dg2 =
        hcb::dirac_gradient_c(geom(), dilute(), dilute_trunc(), 1e-3 * hcb::norm(geom().alpha1));
    CHECK(std::abs(dg2.c - dg.c) == 0.0);

    CHECK_THROWS_AS(hcb::dirac_gradient_c(geom(), dilute(), dilute_trunc(),
                                          1e-7 * hcb::norm(geom().alpha1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(hcb::dirac_gradient_c(geom(), dilute(), dilute_trunc(),
                                          0.1 * hcb::norm(geom().alpha1)),
                    std::invalid_argument);
}

TEST_CASE("leading-order cone data combines the corner quantities", "[capacitance]") {
    const auto dd = hcb::dirac_data(geom(), dilute(), dilute_trunc());
    const double areaScale = std::numbers::pi * dilute().radius * dilute().radius;
    CHECK(std::abs(dd.c11 - kGoldenC11AtK) < 1e-9 * kGoldenC11AtK);
    CHECK(std::abs(dd.omegaStar -
                   dilute().vb * std::sqrt(dilute().delta * dd.c11 / areaScale)) < 1e-14);
    CHECK(std::abs(dd.lambda - 0.5 * dilute().vb *
                                   std::sqrt(dilute().delta / (areaScale * dd.c11)) *
                                   std::abs(dd.gradient.c)) < 1e-14);
    CHECK(dd.omegaStar > 0.0);
    CHECK(dd.lambda > 0.0);
    CHECK(dd.lambda < dd.omegaStar);
}
