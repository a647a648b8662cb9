#pragma once
// Runtime invariant suite behind the `selftest` command. Each check computes
// one residual that the theory says should vanish, with a threshold matched
// to how the corresponding quantity is discretized. The suite is a smoke
// screen for a misconfigured build or a broken numeric environment, not a
// substitute for the unit tests.

#include <hcb/capacitance.hpp>
#include <hcb/operators.hpp>

#include <algorithm>
#include <complex>
#include <string>
#include <vector>

namespace hcb {

struct CheckResult {
    std::string name;
    double residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

inline std::vector<CheckResult> run_selfchecks(const LatticeGeometry& g, const CrystalConfig& cfg,
                                               const TruncationParams& trunc) {
    validate(cfg);
    validate(trunc);
    std::vector<CheckResult> out;
    const auto push = [&out](std::string name, double residual, double threshold) {
        out.push_back(CheckResult{std::move(name), residual, threshold, residual <= threshold});
    };

    const SymmetryPoints sp = symmetry_points(g);
    const BlochVector generic{Vec2{0.7, 0.31}};
    const int span = 2 * trunc.multipoleOrder + 1;

    // Exterior minus interior trace of the single layer is the identity.
    {
        const double k = 0.1 * cfg.v;
        AssemblyContext ctx(g, cfg, trunc, sp.k, k);
        const Eigen::MatrixXcd jump = ctx.trace(k, TraceSide::exterior) -
                                      ctx.trace(k, TraceSide::interior) -
                                      Eigen::MatrixXcd::Identity(2 * span, 2 * span);
        push("jump identity", jump.cwiseAbs().maxCoeff(), 1e-10);
    }

    AssemblyContext staticCtx(g, cfg, trunc, generic, 0.0);
    const Eigen::MatrixXcd s0 = staticCtx.single_layer(0.0);
    const Eigen::MatrixXcd t0 = staticCtx.trace(0.0, TraceSide::interior);

    // Total interior flux of the static single layer vanishes row by row.
    {
        double worst = 0.0;
        for (int b = 0; b < 2; ++b) {
            const int row = b * span + trunc.multipoleOrder;
            worst = std::max(worst, t0.row(row).cwiseAbs().maxCoeff());
        }
        push("zero-row", worst, 1e-10);
    }

    push("Hermiticity", (s0 - s0.adjoint()).cwiseAbs().maxCoeff() / s0.cwiseAbs().maxCoeff(),
         1e-12);

    {
        const Eigen::MatrixXcd herm = 0.5 * (s0 + s0.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm);
        // Signed check: the largest eigenvalue must sit strictly below zero.
        push("negative definiteness", eig.eigenvalues().maxCoeff(), 0.0);
    }

    // Green's function residuals at a handful of generic points.
    {
        const double k = 0.5 * cfg.v;
        EwaldParams base;
        base.targetTol = std::clamp(trunc.greensTol, 1e-14, 1e-6);
        EwaldParams wide = base;
        wide.eta = 1.4 * std::sqrt(std::numbers::pi) / g.a;
        const auto ge = make_evaluator(g, generic, k, base);
        const auto gw = make_evaluator(g, generic, k, wide);
        const Vec2 points[3] = {Vec2{0.31, 0.17}, Vec2{-0.42, 0.55}, Vec2{1.05, -0.33}};
        double etaWorst = 0.0;
        double qpWorst = 0.0;
        const std::complex<double> i1{0.0, 1.0};
        for (const Vec2 x : points) {
            const auto v = ge.green(x);
            const double scale = 1.0 + std::abs(v);
            etaWorst = std::max(etaWorst, std::abs(v - gw.green(x)) / scale);
            const auto shifted = ge.green(x + g.l1);
            const auto phase = std::exp(i1 * dot(generic.value, g.l1));
            qpWorst = std::max(qpWorst, std::abs(shifted - phase * v) / scale);
        }
        push("eta-independence", etaWorst, 10.0 * base.targetTol);
        push("quasi-periodicity", qpWorst, 10.0 * base.targetTol);
    }

    {
        const auto r = rotation_covariance_residual(g, cfg, trunc, generic);
        push("rotation covariance", std::max(r.first, r.second), 1e-8);
    }

    // Cross products of the cylinder functions against their closed form.
    {
        double worst = 0.0;
        for (const double z : {0.3, 1.1, 2.7, 7.9}) {
            const auto t = bessel_jy(trunc.multipoleOrder + 1, z);
            const double exact = 2.0 / (std::numbers::pi * z);
            for (int n = 0; n <= trunc.multipoleOrder; ++n) {
                const double w = t.J(n) * t.dY(n) - t.dJ(n) * t.Y(n);
                worst = std::max(worst, std::abs(w - exact) / exact);
            }
        }
        push("Wronskians", worst, 1e-11);
    }

    push("volume_consistency_check", volume_consistency_check(g, cfg, trunc, sp.k), 1e-5);
    return out;
}

} // namespace hcb
