#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vpstab/core/error.hpp"
#include "vpstab/ensemble.hpp"
#include "vpstab/functionals.hpp"
#include "vpstab/math/nelder_mead.hpp"

namespace vpstab {

/// Weighted centroid of the "bulk": the particles inside the smallest ball
/// (over a coarse scan of candidate centers) containing the given mass
/// fraction. The fraction is a recorded configuration knob.
inline Vec3 bulk_centroid(const ParticleEnsemble& ens, double fraction = 0.9) {
    const std::size_t n = ens.size();
    if (n == 0) throw config_error("bulk_centroid: empty ensemble");
    const std::size_t n_cand = std::min<std::size_t>(64, n);
    const std::size_t stride = std::max<std::size_t>(1, n / n_cand);

    double best_r = 1e300;
    Vec3 best_c{};
    std::vector<double> d2(n);
    const std::size_t k_frac = std::min(n - 1, std::size_t(fraction * double(n)));
    for (std::size_t c = 0; c < n; c += stride) {
        const Vec3 ctr = ens.pos[c];
        for (std::size_t i = 0; i < n; ++i) d2[i] = norm2(ens.pos[i] - ctr);
        std::nth_element(d2.begin(), d2.begin() + k_frac, d2.end());
        const double r_enc = std::sqrt(d2[k_frac]);
        if (r_enc < best_r) {
            best_r = r_enc;
            best_c = ctr;
        }
    }
    Vec3 centroid{};
    double m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (norm2(ens.pos[i] - best_c) <= best_r * best_r) {
            centroid += ens.weight[i] * ens.pos[i];
            m += ens.weight[i];
        }
    }
    return (m > 0 ? (1.0 / m) * centroid : best_c);
}

struct ShiftResult {
    Vec3 a{};
    double field_value = 0;  ///< field distance at the returned shift
    bool converged = true;
    int iterations = 0;
};

struct ShiftOptions {
    double bulk_fraction = 0.9;
    double xtol_rel = 1e-5;   ///< simplex tolerance relative to R
    double ftol_rel = 1e-12;  ///< objective spread tolerance relative to |E_pot(f0)|
    int max_iter = 400;
    double softening = 0;
};

/// Shift minimizing the field distance by derivative-free simplex descent
/// started from the bulk centroid (or the supplied guess). The pair-sum
/// part of the objective is shift-independent and evaluated once. The d
/// component is evaluated at the optimum by the caller; the optimizer works
/// on the smooth field term only.
inline ShiftResult optimal_shift(const ParticleEnsemble& ens, const SteadyState& st,
                                 const Vec3* a0 = nullptr, const ShiftOptions& opts = {}) {
    const FieldDistance objective(ens, st, opts.softening);
    const Vec3 start = a0 ? *a0 : bulk_centroid(ens, opts.bulk_fraction);
    const double scale = 0.25 * st.radius();
    auto f = [&](const std::vector<double>& p) { return objective({p[0], p[1], p[2]}); };
    const SimplexResult sr =
        nelder_mead(f, {start.x, start.y, start.z}, scale, opts.xtol_rel * st.radius(),
                    opts.ftol_rel * std::abs(st.e_pot0()), opts.max_iter);
    ShiftResult out;
    out.a = {sr.x[0], sr.x[1], sr.x[2]};
    out.field_value = sr.f;
    out.converged = sr.converged;  // on failure the best iterate is returned, flagged
    out.iterations = sr.iterations;
    return out;
}

/// For each radius, the (approximate) largest mass contained in any ball of
/// that radius: candidate centers are subsampled particle positions plus
/// mean-shift refinements, pooled so the profile is monotone in R by
/// construction.
inline std::vector<double> concentration_profile(const ParticleEnsemble& ens,
                                                 const std::vector<double>& radii) {
    for (double r : radii)
        if (!(r > 0)) throw config_error("concentration_profile: radii must be positive");
    const std::size_t n = ens.size();
    std::vector<Vec3> pool;
    const std::size_t n_cand = std::min<std::size_t>(128, n);
    const std::size_t stride = std::max<std::size_t>(1, n / n_cand);
    for (std::size_t c = 0; c < n; c += stride) pool.push_back(ens.pos[c]);

    auto mass_in = [&](const Vec3& c, double radius) {
        const double r2 = radius * radius;
        double m = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (norm2(ens.pos[i] - c) <= r2) m += ens.weight[i];
        return m;
    };
    auto mean_in = [&](const Vec3& c, double radius) {
        const double r2 = radius * radius;
        Vec3 s{};
        double m = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (norm2(ens.pos[i] - c) <= r2) {
                s += ens.weight[i] * ens.pos[i];
                m += ens.weight[i];
            }
        return m > 0 ? (1.0 / m) * s : c;
    };

    // refine the best coarse candidate per radius and pool the results
    const std::size_t base_pool = pool.size();
    for (double radius : radii) {
        Vec3 best = pool[0];
        double best_m = -1;
        for (std::size_t c = 0; c < base_pool; ++c) {
            const double m = mass_in(pool[c], radius);
            if (m > best_m) {
                best_m = m;
                best = pool[c];
            }
        }
        for (int it = 0; it < 5; ++it) best = mean_in(best, radius);
        pool.push_back(best);
    }

    std::vector<double> out;
    out.reserve(radii.size());
    for (double radius : radii) {
        double best = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(max : best)
#endif
        for (std::ptrdiff_t c = 0; c < std::ptrdiff_t(pool.size()); ++c)
            best = std::max(best, mass_in(pool[c], radius));
        out.push_back(best);
    }
    return out;
}

}  // namespace vpstab
