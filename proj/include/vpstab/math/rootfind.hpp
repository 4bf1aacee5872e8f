#pragma once

#include <cmath>
#include <string>

#include "vpstab/core/error.hpp"

namespace vpstab {

/// Brent root finder on a bracketing interval [a,b] with f(a)*f(b) <= 0.
/// Tolerance is on the argument; throws numeric_error (with the bracket in
/// the message) if the bracket is invalid or the iteration stalls.
template <class F>
double find_root(F&& f, double a, double b, double xtol = 1e-14, int max_iter = 200) {
    double fa = f(a), fb = f(b);
    if (fa == 0) return a;
    if (fb == 0) return b;
    if (fa * fb > 0)
        throw numeric_error("find_root: interval [" + std::to_string(a) + "," + std::to_string(b) +
                            "] does not bracket a root (f=" + std::to_string(fa) + "," +
                            std::to_string(fb) + ")");
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2 * 1e-16 * std::abs(b) + 0.5 * xtol;
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0) return b;
        if (std::abs(e) < tol || std::abs(fa) <= std::abs(fb)) {
            d = e = m;  // bisection
        } else {
            double p, q, r, s = fb / fa;
            if (a == c) {
                p = 2 * m * s;
                q = 1 - s;
            } else {
                q = fa / fc; r = fb / fc;
                p = s * (2 * m * q * (q - r) - (b - a) * (r - 1));
                q = (q - 1) * (r - 1) * (s - 1);
            }
            if (p > 0) q = -q; else p = -p;
            if (2 * p < std::min(3 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d; d = p / q;  // accept interpolation
            } else {
                d = e = m;
            }
        }
        a = b; fa = fb;
        b += (std::abs(d) > tol) ? d : (m > 0 ? tol : -tol);
        fb = f(b);
        if ((fb > 0) == (fc > 0)) { c = a; fc = fa; d = e = b - a; }
    }
    throw numeric_error("find_root: no convergence after " + std::to_string(max_iter) +
                        " iterations in [" + std::to_string(a) + "," + std::to_string(b) + "]");
}

/// Expands [a,b] geometrically to the right until f changes sign.
template <class F>
void expand_bracket_up(F&& f, double& a, double& b, double factor = 2.0, int max_iter = 200) {
    double fa = f(a), fb = f(b);
    for (int it = 0; it < max_iter && fa * fb > 0; ++it) {
        a = b;
        fa = fb;
        b *= factor;
        fb = f(b);
    }
    if (fa * fb > 0)
        throw numeric_error("expand_bracket_up: no sign change up to " + std::to_string(b));
}

}  // namespace vpstab
