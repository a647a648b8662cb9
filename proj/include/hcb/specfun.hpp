#pragma once
// Real-argument cylinder functions (J_n, Y_n, H1_n and derivatives) plus the
// exponential-integral family used by the lattice-sum acceleration.
//
// Accuracy contract: <= 1e-12 absolute-or-relative on the supported domain
// (0 < z <= 1e4, order <= 128). All arguments here are k*r with real k >= 0,
// so nothing complex-valued is needed.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hcb {

inline constexpr double euler_gamma = 0.57721566490153286060651209008240243;

/// J_n and Y_n for n = 0..maxOrder at a fixed argument. Derivatives come from
/// f_n' = (f_{n-1} - f_{n+1}) / 2 with f_{-1} = -f_1.
struct CylinderFunctionTable {
    int maxOrder = 0;
    double argument = 0.0;
    std::vector<double> valuesJ;
    std::vector<double> valuesY;

    double J(int n) const { return n >= 0 ? valuesJ[n] : (n % 2 ? -valuesJ[-n] : valuesJ[-n]); }
    double Y(int n) const { return n >= 0 ? valuesY[n] : (n % 2 ? -valuesY[-n] : valuesY[-n]); }
    /// Requires |n| + 1 <= maxOrder.
    double dJ(int n) const { return 0.5 * (J(n - 1) - J(n + 1)); }
    double dY(int n) const { return 0.5 * (Y(n - 1) - Y(n + 1)); }
};

namespace detail {

/// J_0..J_nmax by Miller's downward recurrence, normalized with
/// J_0 + 2 (J_2 + J_4 + ...) = 1. Stable for all orders; rescales on the way
/// down to dodge overflow at small z.
inline void bessel_j_downward(int nmax, double z, std::vector<double>& out) {
    const int start = nmax + 16 +
        static_cast<int>(std::ceil(z + 12.0 * std::cbrt(z + 1.0) + 0.5 * std::sqrt(40.0 * (nmax + 1))));
    double jp = 0.0;       // J_{m+1} (unnormalized)
    double jc = 1e-300;    // J_m
    double norm = 0.0;     // J_0 + 2 sum J_{2k}, accumulated on the fly
    out.assign(nmax + 1, 0.0);
    for (int m = start; m >= 0; --m) {
        const double jm = (2.0 * (m + 1) / z) * jc - jp;
        jp = jc;
        jc = jm;
        if (m <= nmax) out[m] = jc;
        if (m % 2 == 0) norm += (m == 0 ? 1.0 : 2.0) * jc;
        if (std::abs(jc) > 1e250) {
            jc *= 1e-250;
            jp *= 1e-250;
            norm *= 1e-250;
            for (auto& v : out) v *= 1e-250;
        }
    }
    for (auto& v : out) v /= norm;
}

/// Y_0 and Y_1 by the ascending series (long double accumulation); accurate to
/// ~1e-13 up to z ~ 17 where the cancellation eats about six digits.
inline void bessel_y01_series(double z, double& y0, double& y1) {
    using ld = long double;
    const ld x = z, q = x * x / 4.0L;
    // Y_0 = (2/pi)[(ln(z/2)+gamma) J_0 + sum_{m>=1} (-1)^{m+1} H_m q^m/(m!)^2]
    ld j0 = 1.0L, t0 = 1.0L, s0 = 0.0L, h = 0.0L;
    for (int m = 1; m <= 130; ++m) {
        t0 *= -q / (static_cast<ld>(m) * m);
        h += 1.0L / m;
        j0 += t0;
        s0 -= h * t0;
        if (std::abs(static_cast<double>(t0)) < 1e-25 * (1.0 + std::abs(static_cast<double>(j0))) && m > 4)
            break;
    }
    const ld twoPi = 2.0L / std::numbers::pi_v<ld>;
    const ld lg = std::log(x / 2.0L) + static_cast<ld>(euler_gamma);
    y0 = static_cast<double>(twoPi * (lg * j0 + s0));
    // Y_1 = (2/pi)[(ln(z/2)+gamma) J_1 - 1/z
    //              - (1/2) sum_{m>=0} (-1)^m (H_m + H_{m+1}) (z/2) q^m/(m!(m+1)!)]
    ld j1 = 0.0L, acc = 0.0L, term = 0.5L * x;  // term = (-1)^m (z/2) q^m/(m!(m+1)!)
    ld hm = 0.0L, hm1 = 1.0L;
    for (int m = 0; m <= 130; ++m) {
        j1 += term;
        acc += term * (hm + hm1);
        term *= -q / (static_cast<ld>(m + 1) * (m + 2));
        hm += 1.0L / (m + 1);
        hm1 += 1.0L / (m + 2);
        if (std::abs(static_cast<double>(term)) < 1e-25 * (1.0 + std::abs(static_cast<double>(acc)) +
                                                           std::abs(static_cast<double>(j1))) && m > 4)
            break;
    }
    y1 = static_cast<double>(twoPi * (lg * j1 - 1.0L / x - 0.5L * acc));
}

/// Hankel-type asymptotic expansion for J_n, Y_n (n = 0, 1), z > ~17:
///   J_n ~ sqrt(2/pi z)(P cos chi - Q sin chi),  Y_n ~ sqrt(2/pi z)(P sin chi + Q cos chi),
/// chi = z - (2n+1) pi/4, with a_k(n) = prod_{i<k}(4n^2-(2i+1)^2)/(k! 8^k),
/// P = a_0 - a_2/z^2 + ...,  Q = a_1/z - a_3/z^3 + ...
/// Truncated at the smallest term; phase handled in long double.
inline void bessel_jy01_asymptotic(int n, double z, double& jn, double& yn) {
    using ld = long double;
    const ld mu = 4.0L * n * n;
    ld r = 1.0L;  // a_k / z^k
    ld p = 0.0L, q = 0.0L;
    for (int k = 0; k < 80; ++k) {
        const ld signed_r = ((k / 2) % 2 ? -r : r);
        if (k % 2 == 0) p += signed_r; else q += signed_r;
        const ld rn = r * (mu - (2.0L * k + 1.0L) * (2.0L * k + 1.0L)) / (8.0L * z * (k + 1));
        if (std::abs(static_cast<double>(rn)) >= std::abs(static_cast<double>(r))) break;
        r = rn;
        if (std::abs(static_cast<double>(r)) < 1e-20) break;
    }
    const ld chi = static_cast<ld>(z) - (2.0L * n + 1.0L) * std::numbers::pi_v<ld> / 4.0L;
    const ld amp = std::sqrt(2.0L / (std::numbers::pi_v<ld> * z));
    jn = static_cast<double>(amp * (p * std::cos(chi) - q * std::sin(chi)));
    yn = static_cast<double>(amp * (p * std::sin(chi) + q * std::cos(chi)));
}

}  // namespace detail

/// J and Y tables by downward (J) / upward (Y) recurrence.
inline CylinderFunctionTable bessel_jy(int maxOrder, double z) {
    if (!(z > 0.0)) throw std::domain_error("bessel_jy: argument must be positive");
    if (z > 1e4) throw std::domain_error("bessel_jy: argument above supported range");
    if (maxOrder < 0 || maxOrder > 128) throw std::domain_error("bessel_jy: order out of range");

    CylinderFunctionTable t;
    t.maxOrder = maxOrder;
    t.argument = z;
    detail::bessel_j_downward(maxOrder, z, t.valuesJ);

    double y0, y1;
    if (z <= 17.0) {
        detail::bessel_y01_series(z, y0, y1);
    } else {
        double j;
        detail::bessel_jy01_asymptotic(0, z, j, y0);
        detail::bessel_jy01_asymptotic(1, z, j, y1);
    }
    t.valuesY.assign(maxOrder + 1, 0.0);
    t.valuesY[0] = y0;
    if (maxOrder >= 1) t.valuesY[1] = y1;
    for (int n = 1; n < maxOrder; ++n) {
        t.valuesY[n + 1] = (2.0 * n / z) * t.valuesY[n] - t.valuesY[n - 1];
        if (std::abs(t.valuesY[n + 1]) > 1e290)
            throw std::range_error("bessel_jy: Y overflow (order too large for this argument)");
    }
    return t;
}

/// H^(1)_n(z) = J_n(z) + i Y_n(z).
inline std::complex<double> hankel1(int n, double z) {
    const int m = std::abs(n);
    auto t = bessel_jy(m, z);
    return {t.J(n), t.Y(n)};
}

// ---------------------------------------------------------------------------
// Exponential integrals E_n and the entire function Ein.

/// E_n(x) for x > 0, n >= 1: ascending series for x <= 1, modified Lentz
/// continued fraction otherwise.
inline double expint_en(int n, double x) {
    if (n < 1) throw std::domain_error("expint_en: order must be >= 1");
    if (!(x > 0.0)) throw std::domain_error("expint_en: argument must be positive");
    constexpr double eps = 1e-17;
    if (x <= 1.0) {
        // E_n(x) = (-x)^{n-1}/(n-1)! [psi(n) - ln x] - sum_{m != n-1} (-x)^m /((m-n+1) m!)
        double psi = -euler_gamma;
        for (int i = 1; i < n; ++i) psi += 1.0 / i;
        double fact = 1.0;  // (-x)^m / m!
        double sum = 0.0;
        for (int m = 0; m <= 60; ++m) {
            if (m > 0) fact *= -x / m;
            if (m == n - 1) continue;
            const double term = fact / (m - n + 1);
            sum += term;
            if (m > n && std::abs(term) < eps * std::abs(sum)) break;
        }
        double lead = psi - std::log(x);
        for (int i = 1; i < n; ++i) lead *= -x / i;
        return lead - sum;
    }
    // Lentz continued fraction: E_n(x) = e^{-x} / (x + n - 1*n/(x + n + 2 - 2(n+1)/(...)))
    const double tiny = 1e-300;
    double b = x + n, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 200; ++i) {
        const double an = -static_cast<double>(i) * (n - 1 + i);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h * std::exp(-x);
}

/// E_1(x), E_2(x), ..., E_{nmax}(x) in one pass via the upward recurrence
/// E_{j+1}(x) = (e^{-x} - x E_j(x)) / j. The recurrence amplifies errors only
/// when x >> j, where the values are negligible anyway; fine for lattice sums.
inline void expint_sequence(int nmax, double x, double* out) {
    out[0] = expint_en(1, x);
    const double ex = std::exp(-x);
    for (int j = 1; j < nmax; ++j) out[j] = (ex - x * out[j - 1]) / j;
}

/// Ein(z) = int_0^z (1 - e^{-t})/t dt = sum_{m>=1} (-1)^{m+1} z^m / (m m!).
/// Entire; series is used for |z| <= 4, the E_1 connection beyond.
inline double ein(double z) {
    if (std::abs(z) <= 4.0) {
        double term = 1.0, sum = 0.0;
        for (int m = 1; m <= 60; ++m) {
            term *= z / m;   // z^m / m!
            const double add = (m % 2 ? term : -term) / m;
            sum += add;
            if (std::abs(add) < 1e-18 * (std::abs(sum) + 1e-30) && m > 3) break;
        }
        return sum;
    }
    if (z > 0.0) return euler_gamma + std::log(z) + expint_en(1, z);
    throw std::domain_error("ein: large negative argument not supported");
}

/// Complementary error function (thin wrapper, kept for the Ewald contract).
inline double erfc(double x) { return std::erfc(x); }

}  // namespace hcb
