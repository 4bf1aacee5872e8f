#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "vpstab/core/error.hpp"
#include "vpstab/hphi.hpp"

namespace vpstab {

/// Solution of the radial equation (r^2 z')'/r^2 = -4 pi H(z_+) with
/// z(0) = z0, z'(0) = 0, tabulated on a uniform grid over [0,R] where R is
/// the first root of z. M = -R^2 z'(R) is the total mass matched to the
/// exterior potential.
struct RadialSolution {
    double k = std::numeric_limits<double>::quiet_NaN();  ///< polytropic exponent; NaN for general Q
    std::vector<double> r, z, dz;
    double R = 0;
    double M = 0;

    double z0() const { return z.front(); }
};

struct ShootOptions {
    double rel_tol = 1e-12;        ///< local error control of the adaptive pass
    std::size_t table_nodes = 4097;
    double r_limit_factor = 1e4;   ///< give up if no root within this many core radii
};

/// gamma of the scaling family z_alpha(r) = alpha z(alpha^gamma r).
inline double scaling_gamma(double k) { return 0.5 * (k + 0.5); }

/// Exponent of the total mass under the scaling family: k+3/2-3*gamma = (3-2k)/4.
inline double mass_scaling_exponent(double k) { return k + 1.5 - 3.0 * scaling_gamma(k); }

namespace detail {

// State y = (z, z'); the 2/r term is regularized at r=0.
template <class G>
inline std::array<double, 2> radial_rhs(const G& g, double r, const std::array<double, 2>& y) {
    const double gz = g(y[0]);
    if (r <= 0) return {y[1], -gz / 3.0};
    return {y[1], -gz - 2.0 * y[1] / r};
}

// One classical RK4 step.
template <class G>
inline std::array<double, 2> rk4_step(const G& g, double r, std::array<double, 2> y, double h) {
    auto k1 = radial_rhs(g, r, y);
    auto k2 = radial_rhs(g, r + h / 2, {y[0] + h / 2 * k1[0], y[1] + h / 2 * k1[1]});
    auto k3 = radial_rhs(g, r + h / 2, {y[0] + h / 2 * k2[0], y[1] + h / 2 * k2[1]});
    auto k4 = radial_rhs(g, r + h, {y[0] + h * k3[0], y[1] + h * k3[1]});
    return {y[0] + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            y[1] + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
}

// Dormand-Prince 5(4) embedded step; returns the 5th-order solution and the
// embedded error estimate.
template <class G>
inline void dopri_step(const G& g, double r, const std::array<double, 2>& y, double h,
                       std::array<double, 2>& y5, std::array<double, 2>& err) {
    static constexpr double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
    static constexpr double a21 = 1. / 5;
    static constexpr double a31 = 3. / 40, a32 = 9. / 40;
    static constexpr double a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9;
    static constexpr double a51 = 19372. / 6561, a52 = -25360. / 2187, a53 = 64448. / 6561,
                            a54 = -212. / 729;
    static constexpr double a61 = 9017. / 3168, a62 = -355. / 33, a63 = 46732. / 5247,
                            a64 = 49. / 176, a65 = -5103. / 18656;
    static constexpr double b1 = 35. / 384, b3 = 500. / 1113, b4 = 125. / 192,
                            b5 = -2187. / 6784, b6 = 11. / 84;
    static constexpr double e1 = 71. / 57600, e3 = -71. / 16695, e4 = 71. / 1920,
                            e5 = -17253. / 339200, e6 = 22. / 525, e7 = -1. / 40;

    auto k1 = radial_rhs(g, r, y);
    auto at = [&](double c, std::array<double, 2> v) { return radial_rhs(g, r + c * h, v); };
    auto k2 = at(c2, {y[0] + h * a21 * k1[0], y[1] + h * a21 * k1[1]});
    auto k3 = at(c3, {y[0] + h * (a31 * k1[0] + a32 * k2[0]), y[1] + h * (a31 * k1[1] + a32 * k2[1])});
    auto k4 = at(c4, {y[0] + h * (a41 * k1[0] + a42 * k2[0] + a43 * k3[0]),
                      y[1] + h * (a41 * k1[1] + a42 * k2[1] + a43 * k3[1])});
    auto k5 = at(c5, {y[0] + h * (a51 * k1[0] + a52 * k2[0] + a53 * k3[0] + a54 * k4[0]),
                      y[1] + h * (a51 * k1[1] + a52 * k2[1] + a53 * k3[1] + a54 * k4[1])});
    auto k6 = at(1.0, {y[0] + h * (a61 * k1[0] + a62 * k2[0] + a63 * k3[0] + a64 * k4[0] + a65 * k5[0]),
                       y[1] + h * (a61 * k1[1] + a62 * k2[1] + a63 * k3[1] + a64 * k4[1] + a65 * k5[1])});
    for (int i = 0; i < 2; ++i)
        y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    auto k7 = radial_rhs(g, r + h, y5);
    for (int i = 0; i < 2; ++i)
        err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
}

}  // namespace detail

/// Integrates the singular radial equation outward from the regular singular
/// point using a second-order series start, an adaptive embedded pass to
/// bracket the first root, and bisection-by-integration to refine R. The
/// returned table is produced by a fixed-step pass on the final grid.
inline RadialSolution shoot_profile(const DensityProfile& h_of_z, double z0,
                                    const ShootOptions& opts = {}) {
    if (!(z0 > 0)) throw config_error("shoot_profile: central value must be positive");
    auto g = [&](double z) { return 4.0 * pi * h_of_z(z); };
    const double g0 = g(z0);
    if (!(g0 > 0)) throw numeric_error("shoot_profile: density vanishes at the central value");
    const double gp0 = 4.0 * pi * h_of_z.derivative(z0);
    const double r_core = std::sqrt(6.0 * z0 / g0);

    // series start: z = z0 - g0 r^2/6 + g0 g0' r^4/120
    auto series = [&](double r) -> std::array<double, 2> {
        return {z0 - g0 * r * r / 6.0 + g0 * gp0 * std::pow(r, 4) / 120.0,
                -g0 * r / 3.0 + g0 * gp0 * std::pow(r, 3) / 30.0};
    };

    // adaptive pass to bracket the root
    double r = 1e-3 * r_core;
    std::array<double, 2> y = series(r);
    const double sc_z = z0, sc_v = z0 / r_core;
    double h = 1e-2 * r_core;
    double r_prev = r;
    std::array<double, 2> y_prev = y;
    const double r_limit = opts.r_limit_factor * r_core;
    while (y[0] > 0) {
        if (r > r_limit)
            throw numeric_error(
                "shoot_profile: no root of z within " + std::to_string(r_limit) +
                " (violated assumption: the profile should have compact support)");
        if (h < 1e-14 * std::max(r, r_core))
            throw numeric_error("shoot_profile: step size underflow at r=" + std::to_string(r) +
                                ", z=" + std::to_string(y[0]));
        std::array<double, 2> y_new, err;
        detail::dopri_step(g, r, y, h, y_new, err);
        const double e = std::max(std::abs(err[0]) / sc_z, std::abs(err[1]) / sc_v);
        if (e <= opts.rel_tol) {
            r_prev = r;
            y_prev = y;
            r += h;
            y = y_new;
        }
        const double grow = (e > 0) ? 0.9 * std::pow(opts.rel_tol / e, 0.2) : 5.0;
        h *= std::min(5.0, std::max(0.2, grow));
    }

    // refine R by bisection on the step length from the last positive state
    auto substep = [&](double len) {
        std::array<double, 2> s = y_prev;
        const int m = 8;
        for (int i = 0; i < m; ++i) s = detail::rk4_step(g, r_prev + len * i / m, s, len / m);
        return s;
    };
    double lo = 0, hi = r - r_prev;
    for (int it = 0; it < 80 && (hi - lo) > 1e-16 * r; ++it) {
        const double mid = 0.5 * (lo + hi);
        (substep(mid)[0] > 0 ? lo : hi) = mid;
    }
    const double root_len = 0.5 * (lo + hi);
    const auto y_root = substep(root_len);

    RadialSolution sol;
    sol.R = r_prev + root_len;
    sol.M = -sol.R * sol.R * y_root[1];
    if (!(sol.M > 0))
        throw numeric_error("shoot_profile: nonpositive mass at the matched root (M=" +
                            std::to_string(sol.M) + ")");

    // fixed-step table on the final grid
    const std::size_t n = opts.table_nodes;
    sol.r.resize(n);
    sol.z.resize(n);
    sol.dz.resize(n);
    const double hg = sol.R / double(n - 1);
    sol.r[0] = 0;
    sol.z[0] = z0;
    sol.dz[0] = 0;
    std::array<double, 2> s = series(hg);
    sol.r[1] = hg;
    sol.z[1] = s[0];
    sol.dz[1] = s[1];
    const int m = 4;
    for (std::size_t j = 2; j < n; ++j) {
        for (int i = 0; i < m; ++i)
            s = detail::rk4_step(g, sol.r[j - 1] + hg * i / m, s, hg / m);
        sol.r[j] = hg * double(j);
        sol.z[j] = s[0];
        sol.dz[j] = s[1];
    }
    // the endpoint is the root up to integration tolerance
    if (std::abs(sol.z[n - 1]) > 1e-8 * z0)
        throw numeric_error("shoot_profile: table endpoint misses the root, z(R)/z0 = " +
                            std::to_string(sol.z[n - 1] / z0));
    sol.z[n - 1] = 0.0;
    return sol;
}

/// Polytropic case of the radial equation, Q(f) = f^(1+1/k).
inline RadialSolution emden_fowler_shoot(double k, double z0, const ShootOptions& opts = {}) {
    if (!(k > 0 && k < 1.5))
        throw config_error("emden_fowler_shoot: need 0 < k < 3/2, got " + std::to_string(k));
    RadialSolution sol = shoot_profile(DensityProfile::polytropic(k), z0, opts);
    sol.k = k;
    return sol;
}

/// Member of the scaling family z_alpha(r) = alpha z(alpha^gamma r) with the
/// prescribed total mass; exact table transform, polytropic solutions only.
inline RadialSolution scale_to_mass(const RadialSolution& sol, double m_target) {
    if (std::isnan(sol.k))
        throw numeric_error("scale_to_mass: the scaling family applies to polytropic solutions only");
    if (!(m_target > 0)) throw config_error("scale_to_mass: target mass must be positive");
    const double expo = mass_scaling_exponent(sol.k);
    const double alpha = std::pow(m_target / sol.M, 1.0 / expo);
    const double gamma = scaling_gamma(sol.k);
    const double rs = std::pow(alpha, -gamma);

    RadialSolution out;
    out.k = sol.k;
    out.R = rs * sol.R;
    out.M = sol.M * std::pow(alpha, expo);
    const std::size_t n = sol.r.size();
    out.r.resize(n);
    out.z.resize(n);
    out.dz.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.r[j] = rs * sol.r[j];
        out.z[j] = alpha * sol.z[j];
        out.dz[j] = alpha / rs * sol.dz[j];
    }
    return out;
}

}  // namespace vpstab
