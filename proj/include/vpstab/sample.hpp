#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vpstab/core/error.hpp"
#include "vpstab/ensemble.hpp"
#include "vpstab/math/rng.hpp"
#include "vpstab/steady.hpp"

namespace vpstab {

struct SampleOptions {
    /// Emit particles in (x,v)/(-x,-v) pairs: total momentum and center of
    /// mass vanish exactly (f0 is even), N must be even.
    bool antithetic = false;
    /// Optional position/velocity modulation in [0, multiplier_sup]; the
    /// sampled density is multiplier * f0, renormalized by the weights.
    std::function<double(const Vec3&, const Vec3&)> multiplier;
    double multiplier_sup = 1.0;
    double efficiency_floor = 1e-3;
    std::size_t block = 8192;
};

/// Draws N markers from f0 (or multiplier*f0) by rejection in (r,|v|) with
/// isotropic angles: r uniform on [0,R], |v| uniform below the local escape
/// speed, accepted against the known profile. Equal weights M/N; carried
/// f-values are set to f0 and overwritten by perturbation constructors when
/// the sampled density is not f0 itself. Deterministic for a given seed
/// under any thread count (independent per-block streams).
inline ParticleEnsemble sample_f0(const SteadyState& st, std::size_t n, std::uint64_t seed,
                                  const SampleOptions& opts = {}) {
    if (n < 1) throw config_error("sample_f0: need at least one particle");
    if (opts.antithetic && (n % 2 || opts.block % 2))
        throw config_error("sample_f0: antithetic sampling needs even N and block size");
    if (opts.antithetic && opts.multiplier)
        throw config_error("sample_f0: antithetic pairing is incompatible with a multiplier "
                           "(the mirror point would skip its own acceptance test)");

    const double radius = st.radius();
    // envelope constant: sup of R * w_max(r) * r^2 w^2 phi(E) over the domain,
    // scanned on a grid with a safety margin; violations are checked per draw.
    double ratio_max = 0;
    for (int i = 0; i <= 256; ++i) {
        const double r = radius * i / 256.0;
        const double z = st.z_of_r(r);
        const double wm = std::sqrt(2.0 * std::max(0.0, z));
        for (int jj = 1; jj <= 64; ++jj) {
            const double w = wm * jj / 64.0;
            const double e = 0.5 * w * w + st.e0() - z;
            ratio_max = std::max(ratio_max, radius * wm * r * r * w * w * st.phi_of_e(e));
        }
    }
    const double envelope = 1.25 * ratio_max;
    if (!(envelope > 0)) throw numeric_error("sample_f0: degenerate envelope");

    ParticleEnsemble ens;
    ens.pos.resize(n);
    ens.vel.resize(n);
    ens.weight.assign(n, st.mass() / double(n));
    ens.f_init.resize(n);
    ens.seed = seed;
    ens.provenance = "sample_f0";

    const std::size_t n_blocks = (n + opts.block - 1) / opts.block;
    std::vector<std::size_t> proposals(n_blocks, 0);
    bool violated = false;
    double violated_ratio = 0;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::ptrdiff_t bi = 0; bi < std::ptrdiff_t(n_blocks); ++bi) {
        Rng rng = Rng::stream(seed, std::uint64_t(bi));
        const std::size_t lo = std::size_t(bi) * opts.block;
        const std::size_t hi = std::min(n, lo + opts.block);
        const std::size_t cap = (hi - lo) * 100000;  // hard stop against a broken envelope
        std::size_t i = lo, tries = 0;
        while (i < hi && tries < cap) {
            ++tries;
            const double r = radius * rng.uniform();
            const double z = st.z_of_r(r);
            const double wm = std::sqrt(2.0 * std::max(0.0, z));
            const double w = wm * rng.uniform();
            const double u_acc = rng.uniform();
            const double e = 0.5 * w * w + st.e0() - z;
            const double fval = st.phi_of_e(e);
            const double ratio = radius * wm * r * r * w * w * fval;
            if (ratio > envelope) {
                violated = true;
                violated_ratio = std::max(violated_ratio, ratio);
                break;
            }
            if (u_acc * envelope > ratio) continue;
            const Vec3 x = r * rng.unit_vector();
            const Vec3 v = w * rng.unit_vector();
            if (opts.multiplier) {
                const double m = opts.multiplier(x, v);
                if (rng.uniform() * opts.multiplier_sup > m) continue;
            }
            ens.pos[i] = x;
            ens.vel[i] = v;
            ens.f_init[i] = fval;
            ++i;
            if (opts.antithetic && i < hi) {
                ens.pos[i] = -x;
                ens.vel[i] = -v;
                ens.f_init[i] = fval;
                ++i;
            }
        }
        proposals[bi] = tries;
        if (i < hi) violated = true;  // cap exhausted
    }

    if (violated)
        throw numeric_error("sample_f0: rejection envelope failure (envelope=" +
                            std::to_string(envelope) +
                            ", worst ratio=" + std::to_string(violated_ratio) + ")");
    std::size_t total_tries = 0;
    for (auto t : proposals) total_tries += t;
    const double efficiency = double(n) / double(std::max<std::size_t>(1, total_tries));
    if (efficiency < opts.efficiency_floor)
        throw numeric_error("sample_f0: rejection efficiency " + std::to_string(efficiency) +
                            " below floor " + std::to_string(opts.efficiency_floor) +
                            " (envelope=" + std::to_string(envelope) + ")");
    return ens;
}

}  // namespace vpstab
