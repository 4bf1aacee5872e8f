#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "vpstab/forces.hpp"

namespace vpstab {

/// One kick-drift-kick step. `acc` must hold the accelerations at the current
/// positions and is replaced by the accelerations at the new positions, so
/// consecutive steps evaluate the field once each.
inline void leapfrog_step(ParticleEnsemble& ens, double dt, const ForceModel& fm,
                          std::vector<Vec3>& acc) {
    const std::size_t n = ens.size();
    if (acc.size() != n) acc = accelerations(ens, fm);
    const double half = 0.5 * dt;
    for (std::size_t i = 0; i < n; ++i) {
        ens.vel[i] += half * acc[i];
        ens.pos[i] += dt * ens.vel[i];
    }
    acc = accelerations(ens, fm);
    for (std::size_t i = 0; i < n; ++i) ens.vel[i] += half * acc[i];
    ens.time += dt;
}

/// Convenience single-step form (recomputes the field twice).
inline void leapfrog_step(ParticleEnsemble& ens, double dt, const ForceModel& fm) {
    std::vector<Vec3> acc;
    leapfrog_step(ens, dt, fm, acc);
}

struct EvolveResult {
    bool completed = true;
    std::string halt_reason;
    std::size_t steps = 0;
};

/// Advances the ensemble to t_end with fixed steps, invoking `monitor(ens)`
/// at t=0, every `cadence` of time, and at the end. Non-finite state halts
/// the run and restores the last monitored state.
inline EvolveResult evolve(ParticleEnsemble& ens, double t_end, double dt, double cadence,
                           const ForceModel& fm,
                           const std::function<void(const ParticleEnsemble&)>& monitor = {}) {
    if (!(dt > 0)) throw config_error("evolve: dt must be positive");
    EvolveResult res;
    const double t0 = ens.time;
    auto finite = [&]() {
        for (std::size_t i = 0; i < ens.size(); ++i)
            if (!std::isfinite(ens.pos[i].x + ens.pos[i].y + ens.pos[i].z + ens.vel[i].x +
                               ens.vel[i].y + ens.vel[i].z))
                return false;
        return true;
    };

    if (monitor) monitor(ens);
    ParticleEnsemble last_good = ens;
    std::vector<Vec3> acc = accelerations(ens, fm);
    double next_emit = t0 + cadence;
    while (ens.time < t_end - 0.5 * dt) {
        leapfrog_step(ens, dt, fm, acc);
        ++res.steps;
        const bool at_end = ens.time >= t_end - 0.5 * dt;
        if (ens.time >= next_emit - 0.5 * dt || at_end) {
            if (!finite()) {
                ens = last_good;
                res.completed = false;
                res.halt_reason = "non-finite state at t=" + std::to_string(ens.time);
                return res;
            }
            if (monitor) monitor(ens);
            last_good = ens;
            while (next_emit <= ens.time + 0.5 * dt) next_emit += cadence;
        }
    }
    return res;
}

struct ScalarSummary {
    double min = 0, max = 0, mean = 0;
};

/// Conserved/monitored bulk quantities plus per-particle E and L summaries.
/// E uses the frozen steady potential when one is supplied (the transported
/// invariant of the mean-field characteristics), otherwise the softened
/// pairwise potential.
struct ConservedQuantities {
    double mass = 0;
    Vec3 momentum{}, angular_momentum{};
    double e_kin = 0, e_pot = 0, e_total = 0;
    ScalarSummary particle_energy, particle_l2;
};

inline ConservedQuantities conserved_quantities(const ParticleEnsemble& ens, double softening,
                                                const SteadyState* steady = nullptr) {
    const std::size_t n = ens.size();
    ConservedQuantities out;
    out.mass = ens.total_mass();
    out.momentum = ens.momentum();
    out.angular_momentum = ens.angular_momentum();

    std::vector<double> phi(n, 0.0);
    if (steady) {
        for (std::size_t i = 0; i < n; ++i) phi[i] = steady->u0(norm(ens.pos[i]));
        // external field: no 1/2 in the potential energy
        for (std::size_t i = 0; i < n; ++i) out.e_pot += ens.weight[i] * phi[i];
    } else {
        const double eps2 = softening * softening;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
            double p = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (std::size_t(i) == j) continue;
                const double q2 = norm2(ens.pos[i] - ens.pos[j]) + eps2;
                p -= ens.weight[j] / std::sqrt(q2);
            }
            phi[i] = p;
        }
        for (std::size_t i = 0; i < n; ++i) out.e_pot += 0.5 * ens.weight[i] * phi[i];
    }

    auto acc_summary = [](ScalarSummary& s, double v, std::size_t i, double w, double mass) {
        if (i == 0) { s.min = s.max = v; }
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        s.mean += w / mass * v;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const double ek = 0.5 * norm2(ens.vel[i]);
        out.e_kin += ens.weight[i] * ek;
        const double e = ek + phi[i];
        const Vec3 l = cross(ens.pos[i], ens.vel[i]);
        acc_summary(out.particle_energy, e, i, ens.weight[i], out.mass);
        acc_summary(out.particle_l2, norm2(l), i, ens.weight[i], out.mass);
    }
    out.e_total = out.e_kin + out.e_pot;
    return out;
}

}  // namespace vpstab
