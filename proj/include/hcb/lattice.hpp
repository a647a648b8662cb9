#pragma once
// Honeycomb lattice geometry: direct/dual bases, bubble centers, Brillouin-zone
// symmetry points and piecewise-linear k-paths.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hcb {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
    Vec2 operator-() const { return {-x, -y}; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double norm2(Vec2 a) { return a.x * a.x + a.y * a.y; }

/// Bloch parameter (a point of the reciprocal torus).
struct BlochVector {
    Vec2 value;
};

/// Hexagonal lattice with a two-bubble basis placed at the third points of the
/// cell diagonal. Direct vectors l1, l2; dual vectors satisfy alpha_i . l_j =
/// 2 pi delta_ij. kPoint and mPoint are the usual corner / edge-midpoint of the
/// Brillouin zone.
struct LatticeGeometry {
    Vec2 l1, l2;
    double a = 0.0;
    double cellArea = 0.0;
    Vec2 x1, x2;
    Vec2 alpha1, alpha2;
    Vec2 gammaPoint, kPoint, mPoint;
};

inline LatticeGeometry build_geometry(double a) {
    if (!(a > 0.0))
        throw std::invalid_argument("build_geometry: lattice constant must be positive");
    const double s3 = std::sqrt(3.0);
    LatticeGeometry g;
    g.a = a;
    g.l1 = {a * s3 / 2.0, a / 2.0};
    g.l2 = {a * s3 / 2.0, -a / 2.0};
    g.cellArea = std::abs(cross(g.l1, g.l2));
    g.x1 = (g.l1 + g.l2) / 3.0;
    g.x2 = 2.0 / 3.0 * (g.l1 + g.l2);
    const double twoPi = 2.0 * std::numbers::pi;
    // Duals of a 2x2 basis: alpha1 = 2 pi (l2 rotated), normalized by the cell area.
    g.alpha1 = twoPi / cross(g.l1, g.l2) * Vec2{g.l2.y, -g.l2.x};
    g.alpha2 = twoPi / cross(g.l2, g.l1) * Vec2{g.l1.y, -g.l1.x};
    g.gammaPoint = {0.0, 0.0};
    g.kPoint = (2.0 * g.alpha1 + g.alpha2) / 3.0;
    g.mPoint = g.alpha1 / 2.0;
    return g;
}

struct SymmetryPoints {
    BlochVector gamma, k, m;
};

inline SymmetryPoints symmetry_points(const LatticeGeometry& g) {
    return {BlochVector{g.gammaPoint}, BlochVector{g.kPoint}, BlochVector{g.mPoint}};
}

/// Rotation by -2 pi / 3 about the origin (the point symmetry that fixes the
/// Dirac points modulo the dual lattice).
inline BlochVector rotate_dual(const LatticeGeometry&, BlochVector v) {
    const double c = -0.5;                    // cos(-2 pi/3)
    const double s = -std::sqrt(3.0) / 2.0;   // sin(-2 pi/3)
    return {Vec2{c * v.value.x - s * v.value.y, s * v.value.x + c * v.value.y}};
}

/// Coordinates of v in the dual basis (exact by biorthogonality:
/// v = s alpha1 + t alpha2  with  s = v.l1 / 2 pi, t = v.l2 / 2 pi).
inline std::pair<double, double> dual_coords(const LatticeGeometry& g, Vec2 v) {
    const double twoPi = 2.0 * std::numbers::pi;
    return {dot(v, g.l1) / twoPi, dot(v, g.l2) / twoPi};
}

/// True when v is a dual lattice vector (integer dual coordinates within tol).
inline bool is_dual_lattice_vector(const LatticeGeometry& g, Vec2 v, double tol = 1e-10) {
    auto [s, t] = dual_coords(g, v);
    return std::abs(s - std::round(s)) <= tol && std::abs(t - std::round(t)) <= tol;
}

/// Fold v into the parallelogram cell {s alpha1 + t alpha2 : 0 <= s, t < 1}.
inline BlochVector reduce_to_cell(const LatticeGeometry& g, BlochVector v) {
    auto [s, t] = dual_coords(g, v.value);
    s -= std::floor(s);
    t -= std::floor(t);
    // Coordinates within rounding noise of the far edge belong at zero, both to
    // honour the half-open convention and so that exact multiples of the dual
    // basis fold cleanly.
    if (s > 1.0 - 1e-12) s = 0.0;
    if (t > 1.0 - 1e-12) t = 0.0;
    return {s * g.alpha1 + t * g.alpha2};
}

/// Lattice point with its integer coordinates in the generating basis.
struct LatticeDiskPoint {
    int i = 0, j = 0;
    Vec2 p;
};

/// All points center + i b1 + j b2 with |point| <= radius, row-major in (i, j).
/// Works for the direct and the dual lattice alike.
inline std::vector<LatticeDiskPoint> lattice_points_in_disk(Vec2 b1, Vec2 b2, Vec2 center,
                                                            double radius) {
    const double area = std::abs(cross(b1, b2));
    if (area == 0.0) throw std::invalid_argument("lattice_points_in_disk: degenerate basis");
    const double h1 = area / norm(b2);  // spacing between consecutive i-lines
    const double h2 = area / norm(b1);
    const double ic = -cross(b2, center) / cross(b2, b1);
    const double jc = -cross(b1, center) / cross(b1, b2);
    const int ilo = static_cast<int>(std::floor(ic - radius / h1)) - 1;
    const int ihi = static_cast<int>(std::ceil(ic + radius / h1)) + 1;
    const int jlo = static_cast<int>(std::floor(jc - radius / h2)) - 1;
    const int jhi = static_cast<int>(std::ceil(jc + radius / h2)) + 1;
    std::vector<LatticeDiskPoint> out;
    for (int i = ilo; i <= ihi; ++i)
        for (int j = jlo; j <= jhi; ++j) {
            const Vec2 p = center + static_cast<double>(i) * b1 + static_cast<double>(j) * b2;
            if (norm(p) <= radius) out.push_back({i, j, p});
        }
    return out;
}

/// Nearest direct-lattice point to x (integer coordinates and position).
/// Scans a 4x4 block of candidate cells around the fractional coordinates,
/// which is exhaustive for this (equilateral, 60 degree) basis.
inline LatticeDiskPoint nearest_lattice_point(const LatticeGeometry& g, Vec2 x) {
    const double twoPi = 2.0 * std::numbers::pi;
    const double s = dot(g.alpha1, x) / twoPi;
    const double t = dot(g.alpha2, x) / twoPi;
    const int i0 = static_cast<int>(std::floor(s));
    const int j0 = static_cast<int>(std::floor(t));
    LatticeDiskPoint best{0, 0, {0.0, 0.0}};
    double bestDist = std::numeric_limits<double>::infinity();
    for (int i = i0 - 1; i <= i0 + 2; ++i)
        for (int j = j0 - 1; j <= j0 + 2; ++j) {
            const Vec2 p = static_cast<double>(i) * g.l1 + static_cast<double>(j) * g.l2;
            const double d = norm(x - p);
            if (d < bestDist) {
                bestDist = d;
                best = {i, j, p};
            }
        }
    return best;
}

/// Distance from alpha to the nearest dual-lattice point.
inline double distance_to_dual_lattice(const LatticeGeometry& g, Vec2 alpha) {
    const double twoPi = 2.0 * std::numbers::pi;
    const double s = dot(alpha, g.l1) / twoPi;
    const double t = dot(alpha, g.l2) / twoPi;
    const int i0 = static_cast<int>(std::floor(s));
    const int j0 = static_cast<int>(std::floor(t));
    double best = std::numeric_limits<double>::infinity();
    for (int i = i0 - 1; i <= i0 + 2; ++i)
        for (int j = j0 - 1; j <= j0 + 2; ++j) {
            const Vec2 q = static_cast<double>(i) * g.alpha1 + static_cast<double>(j) * g.alpha2;
            best = std::min(best, norm(alpha - q));
        }
    return best;
}

struct PathPoint {
    BlochVector alpha;
    double arclength = 0.0;
};

namespace detail {

/// Points on segment [p, q] with |point| = r, returned as parameters in [0, 1].
inline void circle_segment_hits(Vec2 p, Vec2 q, double r, std::vector<double>& ts) {
    ts.clear();
    const Vec2 d = q - p;
    const double A = norm2(d), B = 2.0 * dot(p, d), C = norm2(p) - r * r;
    if (A == 0.0) return;
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0) return;
    const double sq = std::sqrt(disc);
    for (double t : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)})
        if (t >= 0.0 && t <= 1.0) ts.push_back(t);
}

}  // namespace detail

/// Piecewise-linear sampling of the node polyline with pointsPerSegment samples
/// per segment (shared junctions emitted once). Samples falling inside the
/// |alpha| < gammaOffset ball are replaced by the nearest point on the path
/// with |alpha| = gammaOffset (ties broken toward the later segment); the
/// replacement keeps the original cumulative arclength label.
inline std::vector<PathPoint> k_path(const LatticeGeometry& g,
                                     const std::vector<BlochVector>& nodes,
                                     int pointsPerSegment, double gammaOffset) {
    (void)g;
    if (nodes.empty()) throw std::invalid_argument("k_path: empty node list");
    if (pointsPerSegment < 2) throw std::invalid_argument("k_path: pointsPerSegment must be >= 2");
    if (!(gammaOffset > 0.0)) throw std::invalid_argument("k_path: gammaOffset must be positive");

    std::vector<PathPoint> out;
    if (nodes.size() == 1) {
        out.push_back({nodes[0], 0.0});
        return out;
    }

    double arc = 0.0;
    for (std::size_t s = 0; s + 1 < nodes.size(); ++s) {
        const Vec2 p = nodes[s].value, q = nodes[s + 1].value;
        const double len = norm(q - p);
        const int first = (s == 0) ? 0 : 1;  // drop duplicated junction
        for (int i = first; i < pointsPerSegment; ++i) {
            const double t = static_cast<double>(i) / (pointsPerSegment - 1);
            out.push_back({BlochVector{p + t * (q - p)}, arc + t * len});
        }
        arc += len;
    }

    // Candidate replacement points at |alpha| = gammaOffset anywhere on the path.
    struct Hit { Vec2 point; std::size_t segment; };
    std::vector<Hit> hits;
    std::vector<double> ts;
    for (std::size_t s = 0; s + 1 < nodes.size(); ++s) {
        detail::circle_segment_hits(nodes[s].value, nodes[s + 1].value, gammaOffset, ts);
        for (double t : ts)
            hits.push_back({nodes[s].value + t * (nodes[s + 1].value - nodes[s].value), s});
    }

    for (auto& pp : out) {
        if (norm(pp.alpha.value) >= gammaOffset) continue;
        if (hits.empty())
            throw std::invalid_argument("k_path: path lies entirely within the gammaOffset ball");
        const Hit* best = nullptr;
        double bestDist = 0.0;
        for (const auto& h : hits) {
            const double d = norm(h.point - pp.alpha.value);
            if (!best || d < bestDist - 1e-15 ||
                (std::abs(d - bestDist) <= 1e-15 && h.segment > best->segment)) {
                best = &h;
                bestDist = d;
            }
        }
        pp.alpha.value = best->point;
    }
    return out;
}

}  // namespace hcb
