#pragma once
// Quasi-periodic Green's function of the Helmholtz operator (k > 0) and its
// Laplace limit (k = 0) on the hexagonal lattice:
//
//   G(x) = (1/|Y|) sum_{q} e^{i (alpha+q).x} / (k^2 - |alpha+q|^2),   q dual.
//
// The raw series converges far too slowly to evaluate, so everything here runs
// through an Ewald split with parameter eta:
//
//   G(x) = -(1/|Y|) sum_q e^{i(alpha+q).x} e^{(k^2-|alpha+q|^2)/(4 eta^2)}
//                                           / (|alpha+q|^2 - k^2)
//          -(1/4pi) sum_m e^{i alpha.m} sum_{j>=0} c_j E_{j+1}(eta^2 |x-m|^2),
//
// with direct-lattice vectors m, exponential integrals E_n, and coefficients
// c_j = (k/(2 eta))^{2j} / j!. Both halves decay like Gaussians in the shell
// index, so a handful of shells suffices for any fixed eta. Correctness rests
// on eta-independence and quasi-periodicity checks, not on trusted constants.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <hcb/lattice.hpp>
#include <hcb/specfun.hpp>

namespace hcb {

struct ComplexVec2 {
    std::complex<double> x{0.0, 0.0};
    std::complex<double> y{0.0, 0.0};
};

/// Ewald-splitting knobs. eta <= 0 or a cutoff of 0 mean "choose automatically";
/// cutoffs count lattice shells (dual for spectral, direct for spatial).
struct EwaldParams {
    double eta = 0.0;
    int spectralCutoff = 0;
    int spatialCutoff = 0;
    double targetTol = 1e-11;
};

/// k^2 coincides with |alpha+q|^2 for some dual vector q, so a denominator of
/// the spectral series vanishes (empty-lattice resonance).
struct ResonanceError : std::domain_error {
    using std::domain_error::domain_error;
};

inline constexpr double default_guard_tol = 1e-8;

/// c_j = (k/(2 eta))^{2j} / j!, truncated at full double precision.
inline std::vector<double> spatial_coefficients(double k, double eta) {
    std::vector<double> c{1.0};
    if (k == 0.0) return c;
    const double u = (k / (2.0 * eta)) * (k / (2.0 * eta));
    double cj = 1.0;
    for (int j = 1; j <= 60; ++j) {
        cj *= u / j;
        c.push_back(cj);
        if (cj < 1e-16 && static_cast<double>(j) > u) break;
    }
    return c;
}

namespace detail {

inline double shortest_dual_length(const LatticeGeometry& g) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) {
            if (i == 0 && j == 0) continue;
            best = std::min(best, norm(static_cast<double>(i) * g.alpha1 +
                                       static_cast<double>(j) * g.alpha2));
        }
    return best;
}

}  // namespace detail

/// Number of dual-lattice shells needed so the omitted spectral tail stays
/// below tol for every wavenumber up to kmax. Throws after 64 shells.
inline int spectral_shell_count(const LatticeGeometry& g, double eta, double kmax, double tol) {
    const double dualMin = detail::shortest_dual_length(g);
    const double dualCell = std::pow(2.0 * std::numbers::pi, 2) / g.cellArea;
    for (int s = 1; s <= 64; ++s) {
        const double r = kmax + s * dualMin;
        const double count = 6.0 + 2.0 * std::numbers::pi * r * dualMin / dualCell;
        const double bound = std::exp((kmax * kmax - r * r) / (4.0 * eta * eta)) /
                             ((r * r - kmax * kmax) * g.cellArea) * count;
        if (bound < 0.1 * tol) return s;
    }
    throw std::runtime_error("spectral_shell_count: no convergence within 64 shells");
}

/// Direct-lattice analogue: shells of the short-range sum. The worst-case
/// evaluation point sits a covering radius away from its base lattice point.
inline int spatial_shell_count(const LatticeGeometry& g, double eta, double kmax, double tol) {
    const double coverR = g.a / std::numbers::sqrt3;
    const double u = (kmax / (2.0 * eta)) * (kmax / (2.0 * eta));
    for (int s = 1; s <= 64; ++s) {
        const double d = s * g.a - coverR;
        if (!(d > 0.0)) continue;
        const double w = eta * eta * d * d;
        const double count = 6.0 * (s + 1);
        double bound = 0.0;
        if (w < 700.0)
            bound = std::exp(u) * expint_en(1, w) / (4.0 * std::numbers::pi) * count;
        if (bound < 0.1 * tol) return s;
    }
    throw std::runtime_error("spatial_shell_count: no convergence within 64 shells");
}

/// Entire continuation in r^2 of the local regular part
///
///   -(1/4pi) sum_j c_j E_{j+1}(eta^2 r^2) - F(r),
///
/// where F is the free-space kernel, F = -(i/4) H0(k r) for k > 0 and
/// (1/2pi) ln r for k = 0. The log singularities cancel exactly; for small
/// eta^2 r^2 the value comes from power series, otherwise from evaluating the
/// two smooth pieces directly.
inline std::complex<double> ewald_local_regular(double k, double eta, double r2) {
    const double fourPi = 4.0 * std::numbers::pi;
    const double twoPi = 2.0 * std::numbers::pi;
    const double w = eta * eta * r2;
    if (k == 0.0) return {(euler_gamma + 2.0 * std::log(eta) - ein(w)) / fourPi, 0.0};
    if (w <= 1.0) {
        const double u = 0.25 * k * k * r2;  // (k r / 2)^2
        double j0 = 0.0, p = 0.0;
        double term = 1.0, harm = 0.0;  // (-u)^m/(m!)^2 and H_m
        for (int m = 0; m <= 60; ++m) {
            if (m > 0) {
                term *= -u / (static_cast<double>(m) * m);
                harm += 1.0 / m;
            }
            j0 += term;
            p -= term * harm;  // sum (-1)^{m+1} H_m u^m/(m!)^2
            if (m > 3 && std::abs(term) < 1e-18) break;
        }
        const double uu = (k / (2.0 * eta)) * (k / (2.0 * eta));
        double nl = 0.0;
        double cj = 1.0, wj = 1.0, hj = 0.0;  // c_j, (-w)^j/j!, H_j
        for (int j = 0; j <= 60; ++j) {
            if (j > 0) {
                cj *= uu / j;
                wj *= -w / j;
                hj += 1.0 / j;
            }
            double s = 0.0, fm = 1.0;  // S_j(w) with terms (-w)^m/m!
            for (int m = 0; m <= 70; ++m) {
                if (m > 0) fm *= -w / m;
                if (m == j) continue;
                s += fm / (m - j);
                if (m > j + 3 && std::abs(fm) < 1e-19) break;
            }
            nl += cj * (wj * hj - s);
            if (cj < 1e-17 && static_cast<double>(j) > uu) break;
        }
        const double lead = (std::log(2.0 * eta / k) - 0.5 * euler_gamma) / twoPi;
        return {lead * j0 - p / twoPi - nl / fourPi, 0.25 * j0};
    }
    const double r = std::sqrt(r2);
    const auto c = spatial_coefficients(k, eta);
    std::vector<double> e(c.size());
    expint_sequence(static_cast<int>(c.size()), w, e.data());
    double sum = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) sum += c[j] * e[j];
    const auto t = bessel_jy(0, k * r);
    return {-sum / fourPi - 0.25 * t.Y(0), 0.25 * t.J(0)};
}

/// d/d(r^2) of ewald_local_regular, continued through r = 0 the same way.
inline std::complex<double> ewald_local_regular_dr2(double k, double eta, double r2) {
    const double fourPi = 4.0 * std::numbers::pi;
    const double twoPi = 2.0 * std::numbers::pi;
    const double e2 = eta * eta;
    const double w = e2 * r2;
    if (k == 0.0) {
        const double gfun = w < 1e-8 ? 1.0 - 0.5 * w + w * w / 6.0 : -std::expm1(-w) / w;
        return {-e2 / fourPi * gfun, 0.0};
    }
    if (w <= 1.0) {
        const double u = 0.25 * k * k * r2;
        const double k24 = 0.25 * k * k;  // du/d(r^2)
        double dj0 = 0.0, dp = 0.0;
        double tm = -1.0, harm = 1.0;  // (-1)^m m u^{m-1}/(m!)^2 and H_m, from m = 1
        for (int m = 1; m <= 60; ++m) {
            dj0 += tm;
            dp -= tm * harm;
            tm *= -u / (static_cast<double>(m) * (m + 1));
            harm += 1.0 / (m + 1);
            if (m > 3 && std::abs(tm) < 1e-18) break;
        }
        const double uu = (k / (2.0 * eta)) * (k / (2.0 * eta));
        double dnl = 0.0;
        double cj = 1.0, hj = 0.0, pj = 1.0;  // pj = (-w)^{j-1}/(j-1)! for j >= 1
        for (int j = 0; j <= 60; ++j) {
            if (j > 0) {
                cj *= uu / j;
                hj += 1.0 / j;
            }
            double sp = 0.0, fm = -1.0;  // (-1)^m w^{m-1}/(m-1)! from m = 1
            for (int m = 1; m <= 70; ++m) {
                if (m != j) sp += fm / (m - j);
                fm *= -w / m;
                if (m > j + 3 && std::abs(fm) < 1e-19) break;
            }
            const double dwj = (j == 0) ? 0.0 : pj;  // d/dw of (-w)^j/j!
            dnl += cj * (-dwj * hj - sp);
            if (j > 0) pj *= -w / j;
            if (cj < 1e-17 && static_cast<double>(j) > uu) break;
        }
        const double lead = (std::log(2.0 * eta / k) - 0.5 * euler_gamma) / twoPi;
        const double djdr2 = k24 * dj0;
        return {lead * djdr2 - k24 * dp / twoPi - e2 * dnl / fourPi, 0.25 * djdr2};
    }
    const double r = std::sqrt(r2);
    const auto c = spatial_coefficients(k, eta);
    double sum = c[0] * std::exp(-w) / w;  // E_0(w) term
    if (c.size() > 1) {
        std::vector<double> e(c.size() - 1);
        expint_sequence(static_cast<int>(c.size()) - 1, w, e.data());
        for (std::size_t j = 1; j < c.size(); ++j) sum += c[j] * e[j - 1];
    }
    const auto t = bessel_jy(1, k * r);
    const std::complex<double> h1{t.J(1), t.Y(1)};
    return std::complex<double>{e2 / fourPi * sum, 0.0} -
           std::complex<double>{0.0, k / (8.0 * r)} * h1;
}

class GreensEvaluator {
  public:
    struct SpectralTerm {
        Vec2 beta;      // alpha + q
        double weight;  // -exp((k^2-|beta|^2)/(4 eta^2)) / ((|beta|^2-k^2) |Y|)
    };
    struct DirectOffset {
        int i = 0, j = 0;
        Vec2 m;
        std::complex<double> phase;  // e^{i alpha.m}
    };

    const LatticeGeometry& geometry() const { return g_; }
    Vec2 alpha() const { return alpha_; }
    double wavenumber() const { return k_; }
    double eta() const { return params_.eta; }
    /// Params with eta and the shell cutoffs resolved to their actual values.
    const EwaldParams& params() const { return params_; }
    const std::vector<SpectralTerm>& spectral_terms() const { return spectral_; }
    const std::vector<DirectOffset>& direct_offsets() const { return direct_; }
    const std::vector<double>& spatial_coeffs() const { return cj_; }

    std::complex<double> green(Vec2 x) const {
        const auto base = nearest_lattice_point(g_, x);
        if (norm(x - base.p) < 1e-12)
            throw std::domain_error("green: evaluation point lies on the lattice (singular)");
        return spectral_value(x) + spatial_value(x, base, false);
    }

    std::complex<double> green_regular(Vec2 x) const {
        check_regular_domain(x);
        const auto base = nearest_lattice_point(g_, x);
        return spectral_value(x) + spatial_value(x, base, true) +
               ewald_local_regular(k_, params_.eta, norm2(x));
    }

    ComplexVec2 green_grad(Vec2 x) const {
        const auto base = nearest_lattice_point(g_, x);
        if (norm(x - base.p) < 1e-12)
            throw std::domain_error("green_grad: evaluation point lies on the lattice (singular)");
        ComplexVec2 out = spectral_grad(x);
        spatial_grad(x, base, false, out);
        return out;
    }

    ComplexVec2 green_regular_grad(Vec2 x) const {
        check_regular_domain(x);
        const auto base = nearest_lattice_point(g_, x);
        ComplexVec2 out = spectral_grad(x);
        spatial_grad(x, base, true, out);
        const auto d = ewald_local_regular_dr2(k_, params_.eta, norm2(x));
        out.x += 2.0 * x.x * d;
        out.y += 2.0 * x.y * d;
        return out;
    }

  private:
    friend GreensEvaluator make_evaluator(const LatticeGeometry&, BlochVector, double,
                                          EwaldParams, double);
    GreensEvaluator() = default;

    void check_regular_domain(Vec2 x) const {
        if (norm(x) >= g_.a)
            throw std::domain_error(
                "green_regular: point outside the smoothness neighbourhood of the origin");
        const auto base = nearest_lattice_point(g_, x);
        const bool atOrigin = base.i == 0 && base.j == 0;
        if (!atOrigin && norm(x - base.p) < 1e-12)
            throw std::domain_error("green_regular: evaluation point lies on the lattice (singular)");
    }

    std::complex<double> spectral_value(Vec2 x) const {
        std::complex<double> s{0.0, 0.0};
        for (const auto& t : spectral_) {
            const double ph = dot(t.beta, x);
            s += t.weight * std::complex<double>{std::cos(ph), std::sin(ph)};
        }
        return s;
    }

    ComplexVec2 spectral_grad(Vec2 x) const {
        ComplexVec2 out;
        for (const auto& t : spectral_) {
            const double ph = dot(t.beta, x);
            // i beta e^{i beta.x} = beta (i cos - sin)(...)
            const std::complex<double> f =
                t.weight * std::complex<double>{-std::sin(ph), std::cos(ph)};
            out.x += t.beta.x * f;
            out.y += t.beta.y * f;
        }
        return out;
    }

    std::complex<double> spatial_value(Vec2 x, const LatticeDiskPoint& base, bool skipOrigin) const {
        const double e2 = params_.eta * params_.eta;
        std::vector<double> e(cj_.size());
        std::complex<double> acc{0.0, 0.0};
        for (const auto& o : direct_) {
            if (skipOrigin && base.i + o.i == 0 && base.j + o.j == 0) continue;
            const Vec2 d = x - base.p - o.m;
            const double w = e2 * norm2(d);
            if (w > 745.0) continue;
            expint_sequence(static_cast<int>(cj_.size()), w, e.data());
            double sum = 0.0;
            for (std::size_t j = 0; j < cj_.size(); ++j) sum += cj_[j] * e[j];
            acc += o.phase * sum;
        }
        const double ph = dot(alpha_, base.p);
        return acc * std::complex<double>{std::cos(ph), std::sin(ph)} /
               (-4.0 * std::numbers::pi);
    }

    void spatial_grad(Vec2 x, const LatticeDiskPoint& base, bool skipOrigin, ComplexVec2& out) const {
        const double e2 = params_.eta * params_.eta;
        std::vector<double> e(cj_.size());
        ComplexVec2 acc;
        for (const auto& o : direct_) {
            if (skipOrigin && base.i + o.i == 0 && base.j + o.j == 0) continue;
            const Vec2 d = x - base.p - o.m;
            const double w = e2 * norm2(d);
            if (w > 745.0) continue;
            double sum = cj_[0] * std::exp(-w) / w;  // E_0 term
            if (cj_.size() > 1) {
                expint_sequence(static_cast<int>(cj_.size()) - 1, w, e.data());
                for (std::size_t j = 1; j < cj_.size(); ++j) sum += cj_[j] * e[j - 1];
            }
            acc.x += o.phase * (sum * d.x);
            acc.y += o.phase * (sum * d.y);
        }
        const double ph = dot(alpha_, base.p);
        const std::complex<double> f = std::complex<double>{std::cos(ph), std::sin(ph)} * e2 /
                                       (2.0 * std::numbers::pi);
        out.x += f * acc.x;
        out.y += f * acc.y;
    }

    LatticeGeometry g_;
    Vec2 alpha_;
    double k_ = 0.0;
    EwaldParams params_;
    std::vector<SpectralTerm> spectral_;
    std::vector<DirectOffset> direct_;
    std::vector<double> cj_;
};

/// Build an immutable evaluator for fixed (alpha, k). Validates the parameter
/// ranges, rejects Gamma-adjacent alpha at k = 0 and empty-lattice resonances,
/// and precomputes both lattice sums' shells.
inline GreensEvaluator make_evaluator(const LatticeGeometry& g, BlochVector alpha, double k,
                                      EwaldParams params = {},
                                      double guardTol = default_guard_tol) {
    if (!(k >= 0.0) || !std::isfinite(k))
        throw std::invalid_argument("make_evaluator: wavenumber must be finite and >= 0");
    if (!(params.targetTol >= 1e-14 && params.targetTol <= 1e-6))
        throw std::invalid_argument("make_evaluator: targetTol outside [1e-14, 1e-6]");
    double eta = params.eta;
    if (!(eta > 0.0)) eta = std::sqrt(std::numbers::pi) / g.a;
    if (!std::isfinite(eta)) throw std::invalid_argument("make_evaluator: bad eta");

    const double gammaOffset = 1e-2 * norm(g.alpha1);
    if (k == 0.0 && distance_to_dual_lattice(g, alpha.value) < gammaOffset)
        throw std::invalid_argument(
            "make_evaluator: Gamma-point (alpha too close to the dual lattice at k = 0)");

    GreensEvaluator ev;
    ev.g_ = g;
    ev.alpha_ = alpha.value;
    ev.k_ = k;
    ev.params_ = params;
    ev.params_.eta = eta;

    const double dualMin = detail::shortest_dual_length(g);
    int sShells = params.spectralCutoff;
    if (sShells <= 0) sShells = spectral_shell_count(g, eta, k, params.targetTol);
    ev.params_.spectralCutoff = sShells;
    const double specR = k + sShells * dualMin;
    for (const auto& pnt : lattice_points_in_disk(g.alpha1, g.alpha2, alpha.value, specR)) {
        const double b2 = norm2(pnt.p);
        if (std::abs(k * k - b2) < guardTol * b2)
            throw ResonanceError("make_evaluator: empty-lattice resonance (k^2 = |alpha+q|^2)");
        const double weight =
            -std::exp((k * k - b2) / (4.0 * eta * eta)) / ((b2 - k * k) * g.cellArea);
        ev.spectral_.push_back({pnt.p, weight});
    }

    int dShells = params.spatialCutoff;
    if (dShells <= 0) dShells = spatial_shell_count(g, eta, k, params.targetTol);
    ev.params_.spatialCutoff = dShells;
    const double spatR = dShells * g.a + 1e-9;
    for (const auto& pnt : lattice_points_in_disk(g.l1, g.l2, {0.0, 0.0}, spatR)) {
        const double ph = dot(alpha.value, pnt.p);
        ev.direct_.push_back({pnt.i, pnt.j, pnt.p, {std::cos(ph), std::sin(ph)}});
    }

    ev.cj_ = spatial_coefficients(k, eta);
    return ev;
}

inline std::complex<double> green(const GreensEvaluator& ev, Vec2 x) { return ev.green(x); }
inline std::complex<double> green_regular(const GreensEvaluator& ev, Vec2 x) {
    return ev.green_regular(x);
}
inline ComplexVec2 green_grad(const GreensEvaluator& ev, Vec2 x) { return ev.green_grad(x); }
inline ComplexVec2 green_regular_grad(const GreensEvaluator& ev, Vec2 x) {
    return ev.green_regular_grad(x);
}

}  // namespace hcb
