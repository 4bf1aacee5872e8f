#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vpstab/core/error.hpp"

namespace vpstab {

namespace detail {

// Gauss(7)/Kronrod(15) abscissae and weights on [-1,1].
inline constexpr double gk_nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
inline void gk15(F&& f, double a, double b, double& result, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * gk_nodes[i]);
        fv[14 - i] = f(c + h * gk_nodes[i]);
    }
    fv[7] = f(c);
    double kron = gk_wk[7] * fv[7];
    double gauss = gk_wg[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        kron += gk_wk[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1) gauss += gk_wg[i / 2] * (fv[i] + fv[14 - i]);
    }
    result = kron * h;
    err = std::abs((kron - gauss) * h);
}

template <class F>
inline double gk_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol, int depth,
                          double noise_floor) {
    double r, e;
    gk15(f, a, b, r, e);
    if (e <= abs_tol || e <= rel_tol * std::abs(r) || e <= noise_floor) return r;
    if (depth <= 0)
        throw numeric_error("integrate: adaptive quadrature did not converge on [" +
                            std::to_string(a) + "," + std::to_string(b) +
                            "], error estimate " + std::to_string(e));
    const double c = 0.5 * (a + b);
    return gk_adaptive(f, a, c, 0.5 * abs_tol, rel_tol, depth - 1, noise_floor) +
           gk_adaptive(f, c, b, 0.5 * abs_tol, rel_tol, depth - 1, noise_floor);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integral of f over [a,b]. Subintervals whose error
/// estimate sits at the floating-point noise floor of the whole integral are
/// accepted, so near-cancelling integrands cannot deadlock the refinement.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-11, double abs_tol = 0.0,
                 int max_depth = 48) {
    if (a == b) return 0.0;
    double r0, e0;
    detail::gk15(f, a, b, r0, e0);
    if (abs_tol == 0.0) abs_tol = rel_tol * std::max(std::abs(r0), 1e-300);
    const double noise_floor = 1e-15 * (std::abs(r0) + abs_tol);
    return detail::gk_adaptive(f, a, b, abs_tol, rel_tol, max_depth, noise_floor);
}

/// Composite Simpson over n uniform cells of [a,b]; f is also evaluated at
/// cell midpoints, so the rule is O(h^4) with 2n+1 evaluations.
template <class F>
double integrate_uniform(F&& f, double a, double b, std::size_t n) {
    const double h = (b - a) / double(n);
    double sum = 0;
    double left = f(a);
    for (std::size_t j = 0; j < n; ++j) {
        const double x0 = a + h * double(j);
        const double mid = f(x0 + 0.5 * h);
        const double right = (j + 1 == n) ? f(b) : f(x0 + h);
        sum += (h / 6.0) * (left + 4.0 * mid + right);
        left = right;
    }
    return sum;
}

/// Cumulative integral of uniformly spaced node values (spacing h): F[0]=0,
/// F[j] = integral up to node j. Each cell is integrated with the cubic
/// through its four nearest nodes (one-sided at the ends), O(h^4).
inline std::vector<double> cumulative_from_values(const std::vector<double>& y, double h) {
    const std::size_t n = y.size();
    if (n < 4) throw numeric_error("cumulative_from_values: need at least 4 nodes");
    std::vector<double> out(n, 0.0);
    out[1] = out[0] + h / 24.0 * (9 * y[0] + 19 * y[1] - 5 * y[2] + y[3]);
    for (std::size_t j = 1; j + 2 < n; ++j)
        out[j + 1] = out[j] + h / 24.0 * (-y[j - 1] + 13 * y[j] + 13 * y[j + 1] - y[j + 2]);
    out[n - 1] = out[n - 2] + h / 24.0 * (y[n - 4] - 5 * y[n - 3] + 19 * y[n - 2] + 9 * y[n - 1]);
    return out;
}

/// Cumulative integral on a uniform grid: returns F with F[0]=0 and
/// F[j] = integral from grid[0] to grid[j], per-cell Simpson with midpoints.
template <class F>
std::vector<double> cumulative_uniform(F&& f, double a, double b, std::size_t n) {
    std::vector<double> out(n + 1, 0.0);
    const double h = (b - a) / double(n);
    double left = f(a);
    for (std::size_t j = 0; j < n; ++j) {
        const double x0 = a + h * double(j);
        const double mid = f(x0 + 0.5 * h);
        const double right = (j + 1 == n) ? f(b) : f(x0 + h);
        out[j + 1] = out[j] + (h / 6.0) * (left + 4.0 * mid + right);
        left = right;
    }
    return out;
}

}  // namespace vpstab
