#pragma once
// Quasi-periodic capacitance coefficients of the two bubbles and the small
// quantities derived from them: the leading-order resonant frequencies, and
// the gradient data that controls the conical crossing at the corner of the
// Brillouin zone.
//
// The 2x2 matrix C(alpha) comes from the static single layer: solve for the
// densities whose potential is the indicator of one bubble, then integrate
// them over each boundary. In the mode basis only the mean modes enter, so
// the whole computation is one k = 0 assembly plus a small dense solve.

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include <hcb/lattice.hpp>
#include <hcb/operators.hpp>

namespace hcb {

inline Eigen::Matrix2cd capacitance(const LatticeGeometry& g, const CrystalConfig& cfg,
                                    const TruncationParams& trunc, BlochVector alpha) {
    const int n = trunc.multipoleOrder;
    const int span = 2 * n + 1;
    AssemblyContext ctx(g, cfg, trunc, alpha, 0.0);
    const Eigen::MatrixXcd s0 = ctx.single_layer(0.0);
    const double srt = std::sqrt(2.0 * std::numbers::pi * cfg.radius);
    Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(2 * span, 2);
    rhs(n, 0) = srt;
    rhs(span + n, 1) = srt;
    const Eigen::MatrixXcd psi = s0.partialPivLu().solve(rhs);
    Eigen::Matrix2cd c;
    c(0, 0) = -srt * psi(n, 0);
    c(1, 0) = -srt * psi(span + n, 0);
    c(0, 1) = -srt * psi(n, 1);
    c(1, 1) = -srt * psi(span + n, 1);
    return c;
}

/// Leading-order resonant frequencies at this quasi-momentum, ascending. The
/// two eigenvalues of C(alpha) are c11 -+ |c12| by symmetry of the diagonal.
inline std::array<double, 2> asymptotic_bands(const LatticeGeometry& g,
                                              const CrystalConfig& cfg,
                                              const TruncationParams& trunc,
                                              BlochVector alpha) {
    const Eigen::Matrix2cd c = capacitance(g, cfg, trunc, alpha);
    const double c11 = c(0, 0).real();
    const double off = std::abs(c(0, 1));
    const double scale = cfg.delta / (std::numbers::pi * cfg.radius * cfg.radius);
    std::array<double, 2> w = {cfg.vb * std::sqrt(scale * (c11 - off)),
                               cfg.vb * std::sqrt(scale * (c11 + off))};
    if (w[0] > w[1]) std::swap(w[0], w[1]);
    return w;
}

/// How far the capacitance entries are from their rotation identities:
/// first = |c11(R alpha) - c11(alpha)| for the 2pi/3 dual rotation R,
/// second = |c12(R^2 alpha) - e^{i alpha . l1} c12(alpha)|.
inline std::pair<double, double> rotation_covariance_residual(const LatticeGeometry& g,
                                                              const CrystalConfig& cfg,
                                                              const TruncationParams& trunc,
                                                              BlochVector alpha) {
    const BlochVector r1 = rotate_dual(g, alpha);
    const BlochVector r2 = rotate_dual(g, r1);
    const Eigen::Matrix2cd c0 = capacitance(g, cfg, trunc, alpha);
    const Eigen::Matrix2cd c1 = capacitance(g, cfg, trunc, r1);
    const Eigen::Matrix2cd c2 = capacitance(g, cfg, trunc, r2);
    const std::complex<double> phase = std::polar(1.0, dot(alpha.value, g.l1));
    return {std::abs(c1(0, 0) - c0(0, 0)), std::abs(c2(0, 1) - phase * c0(0, 1))};
}

struct DiracGradient {
    std::complex<double> c;          // d c12 / d alpha_x at the K corner
    double antiResidual = 0.0;       // |d c12 / d alpha_y + i c|
    double c11Gradient = 0.0;        // |grad c11|, vanishes at the corner
    double stepError = 0.0;          // Richardson disagreement estimate
};

/// Cartesian gradient of c12 at the K corner by central differences with one
/// Richardson refinement. h = 0 picks the default step of 1e-3 |alpha1|.
inline DiracGradient dirac_gradient_c(const LatticeGeometry& g, const CrystalConfig& cfg,
                                      const TruncationParams& trunc, double h = 0.0) {
    const double a1 = norm(g.alpha1);
    if (h == 0.0) h = 1e-3 * a1;
    if (!(h >= 1e-6 * a1 && h <= 1e-2 * a1))
        throw std::invalid_argument(
            "dirac_gradient_c: step must lie in [1e-6, 1e-2] |alpha1|");
    const Vec2 corner = symmetry_points(g).k.value;

    struct Diff {
        std::complex<double> dx12, dy12;
        double gx11, gy11;
    };
    auto central = [&](double s) {
        const auto cxp = capacitance(g, cfg, trunc, BlochVector{corner + Vec2{s, 0.0}});
        const auto cxm = capacitance(g, cfg, trunc, BlochVector{corner - Vec2{s, 0.0}});
        const auto cyp = capacitance(g, cfg, trunc, BlochVector{corner + Vec2{0.0, s}});
        const auto cym = capacitance(g, cfg, trunc, BlochVector{corner - Vec2{0.0, s}});
        Diff d;
        d.dx12 = (cxp(0, 1) - cxm(0, 1)) / (2.0 * s);
        d.dy12 = (cyp(0, 1) - cym(0, 1)) / (2.0 * s);
        d.gx11 = (cxp(0, 0).real() - cxm(0, 0).real()) / (2.0 * s);
        d.gy11 = (cyp(0, 0).real() - cym(0, 0).real()) / (2.0 * s);
        return d;
    };
    const Diff coarse = central(h);
    const Diff fine = central(0.5 * h);
    auto richardson = [](std::complex<double> c4, std::complex<double> c2) {
        return (4.0 * c4 - c2) / 3.0;
    };
    const std::complex<double> dx = richardson(fine.dx12, coarse.dx12);
    const std::complex<double> dy = richardson(fine.dy12, coarse.dy12);
    DiracGradient out;
    out.c = dx;
    out.antiResidual = std::abs(dy + std::complex<double>{0.0, 1.0} * dx);
    out.c11Gradient = std::hypot(richardson(fine.gx11, coarse.gx11).real(),
                                 richardson(fine.gy11, coarse.gy11).real());
    out.stepError = std::max(std::abs(dx - fine.dx12), std::abs(dy - fine.dy12));
    return out;
}

struct DiracData {
    double omegaStar = 0.0;   // degenerate corner frequency, leading order
    double lambda = 0.0;      // cone slope magnitude, leading order
    double c11 = 0.0;         // corner capacitance diagonal
    DiracGradient gradient;
};

/// Leading-order description of the conical point: corner frequency and slope.
inline DiracData dirac_data(const LatticeGeometry& g, const CrystalConfig& cfg,
                            const TruncationParams& trunc, double h = 0.0) {
    const Vec2 corner = symmetry_points(g).k.value;
    DiracData d;
    d.c11 = capacitance(g, cfg, trunc, BlochVector{corner})(0, 0).real();
    d.gradient = dirac_gradient_c(g, cfg, trunc, h);
    const double areaScale = std::numbers::pi * cfg.radius * cfg.radius;
    d.omegaStar = cfg.vb * std::sqrt(cfg.delta * d.c11 / areaScale);
    d.lambda = 0.5 * cfg.vb * std::sqrt(cfg.delta / (areaScale * d.c11)) *
               std::abs(d.gradient.c);
    return d;
}

}  // namespace hcb
