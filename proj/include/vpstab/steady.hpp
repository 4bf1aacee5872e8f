#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpstab/casimir.hpp"
#include "vpstab/core/error.hpp"
#include "vpstab/core/vec3.hpp"
#include "vpstab/hphi.hpp"
#include "vpstab/math/interp.hpp"
#include "vpstab/math/quadrature.hpp"
#include "vpstab/math/rootfind.hpp"
#include "vpstab/shoot.hpp"

namespace vpstab {

/// A constructed minimizer: the radial profile z = E0 - U0 on [0,R] plus the
/// scalars and quadrature constants every functional needs. Immutable after
/// construction; cheap to copy and safe to share across threads.
class SteadyState {
public:
    SteadyState() = default;

    const CasimirFunction& casimir() const { return casimir_; }
    double k() const { return k_; }  ///< polytropic exponent (NaN for general Q)
    double mass() const { return m_; }
    double e0() const { return e0_; }
    double radius() const { return radius_; }
    double r_max() const { return r_max_; }
    double h_m() const { return h_m_; }

    /// Cached functionals of f0 by radial quadrature.
    double e_kin0() const { return e_kin0_; }
    double e_pot0() const { return e_pot0_; }          ///< field representation
    double e_pot0_double() const { return e_pot0_dbl_; }  ///< nested double-integral representation
    double casimir0() const { return casimir0_; }
    double virial_residual() const { return std::abs(2 * e_kin0_ + e_pot0_) / std::abs(e_pot0_); }

    /// Characteristic orbital period 2 pi sqrt(R^3/M).
    double t_dyn() const { return 2.0 * pi * std::sqrt(radius_ * radius_ * radius_ / m_); }

    /// Cut-off distance z(r) = E0 - U0(r); zero outside the support.
    double z_of_r(double r) const {
        if (r >= radius_) return 0.0;
        return std::max(0.0, z_tab_(r));
    }

    double u0(double r) const {
        if (r >= radius_) return -m_ / r;
        return e0_ - std::max(0.0, z_tab_(r));
    }

    double du0(double r) const {
        if (r >= radius_) return m_ / (r * r);
        return -z_tab_.derivative(r);
    }

    double rho0(double r) const {
        if (r >= radius_) return 0.0;
        return h_of_z_(z_of_r(r));
    }

    /// Steady profile phi(E) = (Q')^{-1}(E0 - E).
    double phi_of_e(double e) const { return casimir_.qprime_inverse(e0_ - e); }

    /// f0(x,v); zero outside the support.
    double f0(const Vec3& x, const Vec3& v) const {
        const double e = 0.5 * norm2(v) + u0(norm(x));
        return phi_of_e(e);
    }

    double f0_max() const { return casimir_.qprime_inverse(z_tab_.values().front()); }
    double rho_central() const { return h_of_z_(z_tab_.values().front()); }

    const HermiteTable& z_table() const { return z_tab_; }
    const DensityProfile& density_profile() const { return h_of_z_; }

private:
    friend struct SteadyBuilder;

    CasimirFunction casimir_;
    double k_ = std::numeric_limits<double>::quiet_NaN();
    double m_ = 0, e0_ = 0, radius_ = 0, r_max_ = 0, h_m_ = 0;
    double e_kin0_ = 0, e_pot0_ = 0, e_pot0_dbl_ = 0, casimir0_ = 0;
    HermiteTable z_tab_;       // interior grid [0,R]
    DensityProfile h_of_z_;
};

struct BuildOptions {
    double z0_seed = 1.0;
    ShootOptions shoot;
    double r_max_factor = 3.0;    ///< export range in units of R
    std::size_t exterior_rows = 512;
    double ck_scale = 1.0;        ///< fault-injection knob for the verify suite; 1 in normal use
    double general_f_max = 0.0;   ///< 0: derived from the central cut-off distance
};

namespace detail {

// phi envelope checks of the general kind; throws on violation when the
// optional constants are supplied.
inline void check_phi_envelopes(const CasimirFunction& cas, double e0, double z_center) {
    const auto& c = cas.constants();
    if (c.c1_prime) {
        for (int i = 1; i <= 32; ++i) {
            const double z = z_center * (0.5 + 0.5 * i / 32.0);  // deep interior energies
            if (cas.qprime_inverse(z) > *c.c1_prime * std::pow(z, c.k1) * (1 + 1e-9))
                throw numeric_error("build_steady: phi(E) <= C1'(E0-E)^k1 fails at E0-E=" +
                                    std::to_string(z));
        }
    }
    if (c.c2_prime) {
        for (int i = 1; i <= 32; ++i) {
            const double z = z_center * 1e-3 * i / 32.0;  // energies near the cut-off
            if (z <= 0) continue;
            if (cas.qprime_inverse(z) < *c.c2_prime * std::pow(z, c.k2) * (1 - 1e-9))
                throw numeric_error("build_steady: phi(E) >= C2'(E0-E)^k2 fails at E0-E=" +
                                    std::to_string(z));
        }
    }
    (void)e0;
}

}  // namespace detail

struct SteadyBuilder {
    static SteadyState from_solution(const RadialSolution& sol, const CasimirFunction& cas,
                                     const DensityProfile& h_of_z, double r_max_factor) {
        SteadyState st;
        st.casimir_ = cas;
        st.k_ = sol.k;
        st.radius_ = sol.R;
        st.m_ = sol.M;
        st.e0_ = -sol.M / sol.R;  // z(R)=0 matched to the exterior -M/r
        st.r_max_ = r_max_factor * sol.R;
        st.z_tab_ = HermiteTable(0.0, sol.R, sol.z, sol.dz);
        st.h_of_z_ = h_of_z;
        compute_constants(st);
        return st;
    }

    static void compute_constants(SteadyState& st) {
        const auto& z = st.z_tab_.values();
        const auto& dz = st.z_tab_.derivs();
        const std::size_t n = z.size();
        const double h = st.radius_ / double(n - 1);
        const double e0 = st.e0_;

        std::vector<double> a(n), b(n), w(n), kin(n), cas(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double r = h * double(j);
            const double u = e0 - std::max(0.0, z[j]);
            const double rho = st.h_of_z_(std::max(0.0, z[j]));
            a[j] = 4.0 * pi * r * r * rho;
            b[j] = 4.0 * pi * r * rho;
            w[j] = r * r * dz[j] * dz[j];
            kin[j] = r * r * velocity_reduce(
                                 [&](double e) { return (e - u) * st.phi_of_e(e); }, u, e0, 1e-10);
            cas[j] = r * r * velocity_reduce(
                                 [&](double e) { return st.casimir_.q(st.phi_of_e(e)); }, u, e0,
                                 1e-10);
        }
        const auto m_enc = cumulative_from_values(a, h);
        const auto j_cum = cumulative_from_values(b, h);
        std::vector<double> g(n, 0.0);
        for (std::size_t j = 1; j < n; ++j) {
            const double r = h * double(j);
            g[j] = a[j] * (m_enc[j] / r + (j_cum[n - 1] - j_cum[j]));
        }
        st.e_kin0_ = 4.0 * pi * cumulative_from_values(kin, h).back();
        st.casimir0_ = 4.0 * pi * cumulative_from_values(cas, h).back();
        st.e_pot0_ = -0.5 * (cumulative_from_values(w, h).back() + st.m_ * st.m_ / st.radius_);
        st.e_pot0_dbl_ = -0.5 * cumulative_from_values(g, h).back();
        st.h_m_ = st.casimir0_ + st.e_kin0_ + st.e_pot0_;
    }
};

namespace detail {
inline double shoot_mass(const DensityProfile& hz, double z0, const ShootOptions& so) {
    ShootOptions coarse = so;
    coarse.table_nodes = 65;  // mass only; the table is rebuilt at full resolution later
    return shoot_profile(hz, z0, coarse).M;
}
}  // namespace detail

/// Constructs the steady state of prescribed total mass. Polytropic Q goes
/// through one shot plus the exact scaling-family transform; general Q keeps
/// the same radial solver (rho depends on U0 only through z = E0-U0) and
/// targets the mass by outer bisection on the central value.
inline SteadyState build_steady(const CasimirFunction& cas, double m_target,
                                const BuildOptions& opts = {}) {
    if (!(m_target > 0)) throw config_error("build_steady: mass must be positive");

    if (cas.is_polytropic()) {
        const DensityProfile hz = DensityProfile::polytropic(cas.k(), opts.ck_scale);
        RadialSolution base = shoot_profile(hz, opts.z0_seed, opts.shoot);
        base.k = cas.k();
        const RadialSolution scaled = scale_to_mass(base, m_target);
        return SteadyBuilder::from_solution(scaled, cas, hz, opts.r_max_factor);
    }

    // general Q: bracket the central value, then root-find on the mass
    double z_cap = 4.0 * opts.z0_seed;
    DensityProfile hz = DensityProfile::tabulated(cas, z_cap);
    auto mass_of = [&](double z0) {
        if (z0 > 0.9 * z_cap) {
            z_cap = 4.0 * z0;
            hz = DensityProfile::tabulated(cas, z_cap);
        }
        return detail::shoot_mass(hz, z0, opts.shoot);
    };
    double lo = opts.z0_seed, hi = opts.z0_seed;
    double m_lo = mass_of(lo), m_hi = m_lo;
    for (int it = 0; it < 200 && m_lo > m_target; ++it) { lo *= 0.5; m_lo = mass_of(lo); }
    for (int it = 0; it < 200 && m_hi < m_target; ++it) { hi *= 2.0; m_hi = mass_of(hi); }
    if (m_lo > m_target || m_hi < m_target)
        throw numeric_error("build_steady: could not bracket the target mass in the central value");
    const double z0 = find_root([&](double v) { return mass_of(v) - m_target; }, lo, hi,
                                1e-13 * hi);
    const RadialSolution sol = shoot_profile(hz, z0, opts.shoot);
    if (std::abs(sol.M - m_target) > 1e-8 * m_target)
        throw numeric_error("build_steady: mass mismatch after bisection, got " +
                            std::to_string(sol.M));
    SteadyState st = SteadyBuilder::from_solution(sol, cas, hz, opts.r_max_factor);
    detail::check_phi_envelopes(cas, st.e0(), z0);
    return st;
}

/// f0(x,v) for a constructed state (free-function form of SteadyState::f0).
inline double f0_eval(const SteadyState& st, const Vec3& x, const Vec3& v) { return st.f0(x, v); }

// ---------------------------------------------------------------------------
// state export/import: JSON header {k, M, E0, R, h_M} + CSV radial table
// with header `r,U0,dU0,rho0` on [0, r_max].
// ---------------------------------------------------------------------------

namespace detail {
inline std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace detail

inline nlohmann::json steady_header_json(const SteadyState& st) {
    nlohmann::json j;
    j["k"] = st.k();
    j["M"] = st.mass();
    j["E0"] = st.e0();
    j["R"] = st.radius();
    j["h_M"] = st.h_m();
    j["r_max"] = st.r_max();
    const auto& cas = st.casimir();
    if (cas.is_polytropic()) {
        j["casimir"] = {{"kind", "polytropic"}, {"k", cas.k()}};
    } else {
        const auto s = cas.samples();
        const auto& c = cas.constants();
        nlohmann::json cj = {{"kind", "general"},
                             {"F0", c.F0}, {"C1", c.C1}, {"C2", c.C2},
                             {"k1", c.k1}, {"k2", c.k2}, {"k3", c.k3},
                             {"f", s.f}, {"q", s.q}, {"qprime", s.qp}};
        if (c.c1_prime) cj["c1_prime"] = *c.c1_prime;
        if (c.c2_prime) cj["c2_prime"] = *c.c2_prime;
        j["casimir"] = cj;
    }
    return j;
}

inline void write_steady_csv(const SteadyState& st, std::ostream& os,
                             std::size_t exterior_rows = 512) {
    os << "r,U0,dU0,rho0\n";
    const auto& z = st.z_table().values();
    const auto& dz = st.z_table().derivs();
    const std::size_t n = z.size();
    const double h = st.radius() / double(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        const double r = h * double(j);
        os << detail::fmt_g17(r) << ',' << detail::fmt_g17(st.e0() - std::max(0.0, z[j])) << ','
           << detail::fmt_g17(-dz[j]) << ','
           << detail::fmt_g17(st.density_profile()(std::max(0.0, z[j]))) << '\n';
    }
    const double span = st.r_max() - st.radius();
    for (std::size_t j = 1; j <= exterior_rows; ++j) {
        const double r = st.radius() + span * double(j) / double(exterior_rows);
        os << detail::fmt_g17(r) << ',' << detail::fmt_g17(-st.mass() / r) << ','
           << detail::fmt_g17(st.mass() / (r * r)) << ",0\n";
    }
}

inline void save_steady(const SteadyState& st, const std::string& json_path,
                        const std::string& csv_path) {
    std::ofstream jf(json_path);
    if (!jf) throw config_error("save_steady: cannot open " + json_path);
    jf << steady_header_json(st).dump(2) << '\n';
    std::ofstream cf(csv_path);
    if (!cf) throw config_error("save_steady: cannot open " + csv_path);
    write_steady_csv(st, cf);
}

inline SteadyState load_steady(const std::string& json_path, const std::string& csv_path) {
    std::ifstream jf(json_path);
    if (!jf) throw config_error("load_steady: cannot open " + json_path);
    nlohmann::json j;
    jf >> j;

    CasimirFunction cas = CasimirFunction::polytropic(1.0);
    const auto& cj = j.at("casimir");
    if (cj.at("kind") == "polytropic") {
        cas = CasimirFunction::polytropic(cj.at("k").get<double>());
    } else {
        CasimirFunction::Constants c;
        c.F0 = cj.at("F0"); c.C1 = cj.at("C1"); c.C2 = cj.at("C2");
        c.k1 = cj.at("k1"); c.k2 = cj.at("k2"); c.k3 = cj.at("k3");
        if (cj.contains("c1_prime")) c.c1_prime = cj.at("c1_prime").get<double>();
        if (cj.contains("c2_prime")) c.c2_prime = cj.at("c2_prime").get<double>();
        cas = CasimirFunction::from_samples(cj.at("f").get<std::vector<double>>(),
                                            cj.at("q").get<std::vector<double>>(),
                                            cj.at("qprime").get<std::vector<double>>(), c);
    }

    const double e0 = j.at("E0"), radius = j.at("R");
    std::ifstream cf(csv_path);
    if (!cf) throw config_error("load_steady: cannot open " + csv_path);
    std::string line;
    std::getline(cf, line);
    if (line != "r,U0,dU0,rho0")
        throw config_error("load_steady: unexpected CSV header '" + line + "'");
    std::vector<double> zv, dzv;
    while (std::getline(cf, line)) {
        double r, u, du, rho;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &r, &u, &du, &rho) != 4)
            throw config_error("load_steady: malformed CSV row '" + line + "'");
        if (r <= radius * (1 + 1e-12)) {
            zv.push_back(e0 - u);
            dzv.push_back(-du);
        }
    }
    if (zv.size() < 4) throw config_error("load_steady: interior table too short");
    zv.back() = std::max(0.0, zv.back());

    RadialSolution sol;
    sol.k = j.at("k").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("k").get<double>();
    sol.R = radius;
    sol.M = j.at("M");
    sol.z = std::move(zv);
    sol.dz = std::move(dzv);

    const DensityProfile hz = cas.is_polytropic()
                                  ? DensityProfile::polytropic(cas.k())
                                  : DensityProfile::tabulated(cas, 1.05 * sol.z.front());
    const double rmf = j.value("r_max", 3.0 * radius) / radius;
    return SteadyBuilder::from_solution(sol, cas, hz, rmf);
}

}  // namespace vpstab
