#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "vpstab/core/error.hpp"
#include "vpstab/ensemble.hpp"
#include "vpstab/math/quadrature.hpp"
#include "vpstab/math/rng.hpp"
#include "vpstab/sample.hpp"
#include "vpstab/steady.hpp"

namespace vpstab {

/// Admissible perturbation of f0. Every kind preserves the total mass
/// exactly (membership in the prescribed mass class).
struct Perturbation {
    enum class Kind { none, boost, amplitude, split_bulk, random_phase };
    Kind kind = Kind::none;

    Vec3 boost_v{};          ///< boost: velocity added to every particle
    double epsilon = 0;      ///< amplitude / random-phase: relative modulation
    double fraction = 0;     ///< split-bulk: mass fraction that separates
    Vec3 split_v{};          ///< split-bulk: velocity of the separating fraction
    double wavelength = 0;   ///< random-phase: modulation wavelength (0: 2R)

    static Kind kind_from_string(const std::string& s) {
        if (s == "none") return Kind::none;
        if (s == "boost") return Kind::boost;
        if (s == "amplitude") return Kind::amplitude;
        if (s == "split-bulk") return Kind::split_bulk;
        if (s == "random-phase") return Kind::random_phase;
        throw config_error("Perturbation: unknown kind '" + s + "'");
    }

    static const char* kind_to_string(Kind k) {
        switch (k) {
            case Kind::none: return "none";
            case Kind::boost: return "boost";
            case Kind::amplitude: return "amplitude";
            case Kind::split_bulk: return "split-bulk";
            case Kind::random_phase: return "random-phase";
        }
        return "?";
    }
};

namespace detail {

// mass of (1+eps g(|x|)) f0 relative to f0, by radial quadrature
template <class G>
double modulated_mass(const SteadyState& st, double eps, G&& g) {
    const auto& z = st.z_table().values();
    const std::size_t n = z.size();
    const double h = st.radius() / double(n - 1);
    std::vector<double> a(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double r = h * double(j);
        a[j] = 4.0 * pi * r * r * g(r) * st.density_profile()(std::max(0.0, z[j]));
    }
    return st.mass() + eps * cumulative_from_values(a, h).back();
}

// mass of (1+eps cos(kv.x + psi)) f0: the cosine integrates against the
// radial density through its spherical transform
inline double plane_modulated_mass(const SteadyState& st, double eps, double kappa, double psi) {
    const auto& z = st.z_table().values();
    const std::size_t n = z.size();
    const double h = st.radius() / double(n - 1);
    std::vector<double> a(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double r = h * double(j);
        const double sinc = (kappa * r < 1e-8) ? 1.0 : std::sin(kappa * r) / (kappa * r);
        a[j] = 4.0 * pi * r * r * sinc * st.density_profile()(std::max(0.0, z[j]));
    }
    return st.mass() + eps * std::cos(psi) * cumulative_from_values(a, h).back();
}

}  // namespace detail

/// Builds the perturbed initial data as a sampled ensemble of mass exactly M.
/// Carried f-values are the closed-form values of the perturbed distribution
/// at the final phase-space points, so the particle Casimir machinery stays
/// exact.
inline ParticleEnsemble perturb(const SteadyState& st, const Perturbation& pert, std::size_t n,
                                std::uint64_t seed) {
    ParticleEnsemble ens;
    switch (pert.kind) {
        case Perturbation::Kind::none: {
            SampleOptions so;
            so.antithetic = (n % 2 == 0);
            ens = sample_f0(st, n, seed, so);
            ens.provenance = "perturb:none";
            break;
        }
        case Perturbation::Kind::boost: {
            SampleOptions so;
            so.antithetic = (n % 2 == 0);
            ens = sample_f0(st, n, seed, so);
            for (auto& v : ens.vel) v += pert.boost_v;
            // f(0)(x,v) = f0(x, v - V): carried values are unchanged
            ens.provenance = "perturb:boost";
            break;
        }
        case Perturbation::Kind::amplitude: {
            if (!(std::abs(pert.epsilon) < 1))
                throw config_error("perturb: amplitude epsilon must satisfy |eps| < 1");
            const double radius = st.radius();
            auto g = [radius](double r) { return std::cos(pi * r / radius); };
            SampleOptions so;
            so.multiplier = [&](const Vec3& x, const Vec3&) {
                return 1.0 + pert.epsilon * g(norm(x));
            };
            so.multiplier_sup = 1.0 + std::abs(pert.epsilon);
            ens = sample_f0(st, n, seed, so);
            const double lambda = st.mass() / detail::modulated_mass(st, pert.epsilon, g);
            for (std::size_t i = 0; i < n; ++i)
                ens.f_init[i] *= lambda * (1.0 + pert.epsilon * g(norm(ens.pos[i])));
            ens.provenance = "perturb:amplitude";
            break;
        }
        case Perturbation::Kind::random_phase: {
            if (!(std::abs(pert.epsilon) < 1))
                throw config_error("perturb: random-phase epsilon must satisfy |eps| < 1");
            Rng prng(seed ^ 0x7061736568706172ULL);
            const Vec3 dir = prng.unit_vector();
            const double psi = 2.0 * pi * prng.uniform();
            const double lam = (pert.wavelength > 0) ? pert.wavelength : 2.0 * st.radius();
            const double kappa = 2.0 * pi / lam;
            auto g = [&](const Vec3& x) { return std::cos(kappa * dot(dir, x) + psi); };
            SampleOptions so;
            so.multiplier = [&](const Vec3& x, const Vec3&) { return 1.0 + pert.epsilon * g(x); };
            so.multiplier_sup = 1.0 + std::abs(pert.epsilon);
            ens = sample_f0(st, n, seed, so);
            const double lambda =
                st.mass() / detail::plane_modulated_mass(st, pert.epsilon, kappa, psi);
            for (std::size_t i = 0; i < n; ++i)
                ens.f_init[i] *= lambda * (1.0 + pert.epsilon * g(ens.pos[i]));
            ens.provenance = "perturb:random-phase";
            break;
        }
        case Perturbation::Kind::split_bulk: {
            const double mu = pert.fraction;
            if (!(mu > 0 && mu < 1))
                throw config_error("perturb: split-bulk fraction must lie in (0,1)");
            SampleOptions so;
            so.antithetic = (n % 2 == 0);
            ens = sample_f0(st, n, seed, so);
            const std::size_t n_split = std::size_t(mu * double(n) + 0.5);
            const Vec3 v_bulk = (-mu / (1.0 - mu)) * pert.split_v;
            for (std::size_t i = 0; i < n; ++i) ens.vel[i] += (i < n_split) ? pert.split_v : v_bulk;
            // enforce the vanishing first moments exactly at t=0
            const double m = ens.total_mass();
            const Vec3 xc = ens.center_of_mass();
            const Vec3 vc = (1.0 / m) * ens.momentum();
            for (std::size_t i = 0; i < n; ++i) {
                ens.pos[i] -= xc;
                ens.vel[i] -= vc;
            }
            const double w_frac = double(n_split) / double(n);
            const Vec3 va = pert.split_v - vc, vb = v_bulk - vc;
            for (std::size_t i = 0; i < n; ++i) {
                const Vec3 x = ens.pos[i] + xc;
                ens.f_init[i] = w_frac * st.f0(x, ens.vel[i] - va) +
                                (1.0 - w_frac) * st.f0(x, ens.vel[i] - vb);
            }
            ens.provenance = "perturb:split-bulk";
            break;
        }
    }
    ens.seed = seed;
    return ens;
}

inline nlohmann::json perturbation_json(const Perturbation& p) {
    nlohmann::json j;
    j["kind"] = Perturbation::kind_to_string(p.kind);
    switch (p.kind) {
        case Perturbation::Kind::boost:
            j["V"] = {p.boost_v.x, p.boost_v.y, p.boost_v.z};
            break;
        case Perturbation::Kind::amplitude:
            j["epsilon"] = p.epsilon;
            break;
        case Perturbation::Kind::random_phase:
            j["epsilon"] = p.epsilon;
            if (p.wavelength > 0) j["wavelength"] = p.wavelength;
            break;
        case Perturbation::Kind::split_bulk:
            j["fraction"] = p.fraction;
            j["V1"] = {p.split_v.x, p.split_v.y, p.split_v.z};
            break;
        case Perturbation::Kind::none:
            break;
    }
    return j;
}

inline Perturbation perturbation_from_json(const nlohmann::json& j) {
    Perturbation p;
    p.kind = Perturbation::kind_from_string(j.at("kind").get<std::string>());
    auto vec = [](const nlohmann::json& a) {
        if (!a.is_array() || a.size() != 3) throw config_error("perturbation: need a 3-vector");
        return Vec3{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
    };
    switch (p.kind) {
        case Perturbation::Kind::boost:
            p.boost_v = vec(j.at("V"));
            break;
        case Perturbation::Kind::amplitude:
            p.epsilon = j.at("epsilon").get<double>();
            break;
        case Perturbation::Kind::random_phase:
            p.epsilon = j.at("epsilon").get<double>();
            p.wavelength = j.value("wavelength", 0.0);
            break;
        case Perturbation::Kind::split_bulk:
            p.fraction = j.at("fraction").get<double>();
            p.split_v = vec(j.at("V1"));
            break;
        case Perturbation::Kind::none:
            break;
    }
    return p;
}

}  // namespace vpstab
