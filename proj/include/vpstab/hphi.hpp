#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "vpstab/casimir.hpp"
#include "vpstab/core/error.hpp"
#include "vpstab/math/interp.hpp"
#include "vpstab/math/quadrature.hpp"

namespace vpstab {

inline constexpr double pi = 3.14159265358979323846;

/// Velocity-space reduction of an energy-dependent phase-space weight:
/// integral over v of W(E) at potential value u equals
/// 4*pi*sqrt(2) * int_u^inf W(E) sqrt(E-u) dE. The square-root endpoint is
/// removed by the substitution E = u + s^2.
template <class W>
double velocity_reduce(W&& w, double u, double e_cut, double rel_tol = 1e-11) {
    if (!(e_cut > u)) return 0.0;
    const double s1 = std::sqrt(e_cut - u);
    auto g = [&](double s) { return s * s * w(u + s * s); };
    return 8.0 * std::sqrt(2.0) * pi * integrate(g, 0.0, s1, rel_tol);
}

/// Spatial density induced by the cut-off profile phi(E) = (Q')^{-1}(E0-E)
/// at potential value u: adaptive quadrature of the defining integral.
/// Returns 0 for u >= e0.
inline double h_phi_eval(const CasimirFunction& casimir, double e0, double u,
                         double rel_tol = 1e-11) {
    if (u >= e0) return 0.0;
    return velocity_reduce([&](double e) { return casimir.qprime_inverse(e0 - e); }, u, e0,
                           rel_tol);
}

/// The constant c_k with 4*pi*h_phi(u) = c_k (E0-u)_+^(k+3/2) for the
/// polytropic profile: c_k = 16 sqrt(2) pi^2 (k/(k+1))^k B(3/2, k+1).
inline double polytrope_constant(double k) {
    if (!(k > 0 && k < 1.5))
        throw config_error("polytrope_constant: need 0 < k < 3/2, got " + std::to_string(k));
    const double beta32 = std::tgamma(1.5) * std::tgamma(k + 1.0) / std::tgamma(k + 2.5);
    return 16.0 * std::sqrt(2.0) * pi * pi * std::pow(k / (k + 1.0), k) * beta32;
}

/// rho as a function of the cut-off distance z = E0 - U0 >= 0. Closed form
/// for polytropes, cached quadrature table otherwise; this is the right-hand
/// side generator of the radial equation, so it must be cheap to evaluate.
class DensityProfile {
public:
    /// Polytropic closed form (c/4pi) z^(k+3/2). `c_scale` rescales the
    /// polytropic constant and exists for fault-injection tests only.
    static DensityProfile polytropic(double k, double c_scale = 1.0) {
        DensityProfile d;
        d.poly_ = true;
        d.k_ = k;
        d.coef_ = c_scale * polytrope_constant(k) / (4.0 * pi);
        return d;
    }

    /// Tabulates H(z) = h_phi at cut-off distance z for a general Q on
    /// [0, z_max], interpolated monotonically in s = sqrt(z).
    static DensityProfile tabulated(const CasimirFunction& casimir, double z_max,
                                    std::size_t n = 1024) {
        if (!(z_max > 0)) throw config_error("DensityProfile: z_max must be positive");
        DensityProfile d;
        d.poly_ = false;
        d.z_max_ = z_max;
        std::vector<double> s(n + 1), h(n + 1);
        const double s_max = std::sqrt(z_max);
        for (std::size_t i = 0; i <= n; ++i) {
            s[i] = s_max * double(i) / double(n);
            h[i] = h_phi_eval(casimir, s[i] * s[i], 0.0);
        }
        d.tab_ = std::make_shared<MonotoneTable>(std::move(s), std::move(h));
        return d;
    }

    double operator()(double z) const {
        if (!(z > 0)) return 0.0;
        if (poly_) return coef_ * std::pow(z, k_ + 1.5);
        if (z > z_max_ * (1 + 1e-12))
            throw numeric_error("DensityProfile: z above tabulated range");
        return (*tab_)(std::sqrt(std::min(z, z_max_)));
    }

    /// dH/dz, used by the series start of the shooter.
    double derivative(double z) const {
        if (!(z > 0)) return 0.0;
        if (poly_) return coef_ * (k_ + 1.5) * std::pow(z, k_ + 0.5);
        const double s = std::sqrt(std::min(z, z_max_));
        return tab_->derivative(s) / (2.0 * s);
    }

private:
    bool poly_ = true;
    double k_ = 1, coef_ = 0, z_max_ = 0;
    std::shared_ptr<const MonotoneTable> tab_;
};

}  // namespace vpstab
