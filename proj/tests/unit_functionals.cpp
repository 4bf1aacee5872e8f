#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vpstab/functionals.hpp"
#include "vpstab/perturb.hpp"
#include "vpstab/sample.hpp"
#include "vpstab/steady.hpp"

using namespace vpstab;

namespace {
const SteadyState& state() {
    static const SteadyState st = build_steady(CasimirFunction::polytropic(1.0), 1.0);
    return st;
}

ParticleEnsemble two_body(double w, double d) {
    ParticleEnsemble e;
    e.pos = {{-d / 2, 0, 0}, {d / 2, 0, 0}};
    e.vel = {{0, 0, 0}, {0, 0, 0}};
    e.weight = {w, w};
    e.f_init = {1.0, 1.0};
    return e;
}
}  // namespace

TEST_CASE("kinetic energy basics") {
    ParticleEnsemble empty;
    CHECK(kinetic_energy(empty) == 0.0);

    ParticleEnsemble one;
    one.pos = {{0, 0, 0}};
    one.vel = {{1, 0, 0}};
    one.weight = {2.0};
    one.f_init = {1.0};
    CHECK(kinetic_energy(one) == 1.0);
    CHECK(potential_energy_particles(one) == 0.0);

    // Galilean identity at zero total momentum
    auto ens = sample_f0(state(), 4000, 2, {.antithetic = true});
    const double k0 = kinetic_energy(ens);
    const Vec3 v{0.3, -0.1, 0.2};
    for (auto& u : ens.vel) u += v;
    CHECK(kinetic_energy(ens) ==
          doctest::Approx(k0 + 0.5 * ens.total_mass() * norm2(v)).epsilon(1e-12));
}

TEST_CASE("pair potential energy: closed two-body value and tree agreement") {
    CHECK(potential_energy_particles(two_body(1.0, 2.0)) == doctest::Approx(-0.5));
    const auto ens = sample_f0(state(), 5000, 3);
    const double direct = potential_energy_particles(ens, {0.0});
    const double tree = potential_energy_particles(ens, {0.0, true, 0.5});
    CHECK(std::abs(tree - direct) / std::abs(direct) <= 1e-3);
}

TEST_CASE("radial potential energy of the homogeneous sphere") {
    const double m = 2.0, radius = 1.5;
    const double rho_c = 3.0 * m / (4.0 * pi * radius * radius * radius);
    auto rho = [&](double r) { return r <= radius ? rho_c : 0.0; };
    const double exact = -0.6 * m * m / radius;
    CHECK(potential_energy_radial_field(rho, radius) == doctest::Approx(exact).epsilon(1e-6));
    CHECK(potential_energy_radial_double(rho, radius) == doctest::Approx(exact).epsilon(1e-6));
    auto zero = [](double) { return 0.0; };
    CHECK(potential_energy_radial_field(zero, 1.0) == 0.0);
    CHECK(potential_energy_radial_double(zero, 1.0) == 0.0);
}

TEST_CASE("steady potential energy representations agree") {
    const auto rep = potential_energy_radial(state());
    CHECK(rep.discrepancy() <= 1e-6);
}

TEST_CASE("particle Casimir: carried-f sums") {
    // uniform f = c with Q=f^2: integral = c M
    ParticleEnsemble ens;
    const double c = 0.37, m = 2.5;
    for (int i = 0; i < 10; ++i) {
        ens.pos.push_back({double(i), 0, 0});
        ens.vel.push_back({0, 0, 0});
        ens.weight.push_back(m / 10);
        ens.f_init.push_back(c);
    }
    const auto cas = CasimirFunction::polytropic(1.0);
    CHECK(casimir_functional(ens, cas) == doctest::Approx(c * m).epsilon(1e-14));

    ens.f_init[3] = 0.0;
    CHECK_THROWS_AS(casimir_functional(ens, cas), numeric_error);
}

TEST_CASE("particle Casimir vs radial quadrature within Monte Carlo bands") {
    const SteadyState& st = state();
    const std::size_t n = 100000;
    const auto ens = sample_f0(st, n, 444);
    const double c_p = casimir_functional(ens, st.casimir());
    // standard error of the carried-f estimator
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = st.casimir().q(ens.f_init[i]) / ens.f_init[i];
        mean += xi / double(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = st.casimir().q(ens.f_init[i]) / ens.f_init[i];
        var += (xi - mean) * (xi - mean) / double(n);
    }
    const double se = st.mass() * std::sqrt(var / double(n));
    CHECK(std::abs(c_p - st.casimir0()) <= 3.0 * se);
}

TEST_CASE("Casimir scaling inequality under mass-preserving damping") {
    const SteadyState& st = state();
    const auto ens = sample_f0(st, 20000, 21);
    const auto& cas = st.casimir();
    const double k3 = cas.constants().k3;
    const double c_full = casimir_functional(ens, cas);
    for (double lam : {0.25, 0.5, 0.75, 0.9}) {
        // integral of Q(lambda f) over the same state
        double c_lam = 0;
        for (std::size_t i = 0; i < ens.size(); ++i)
            c_lam += ens.weight[i] * cas.q(lam * ens.f_init[i]) / ens.f_init[i];
        CHECK(c_lam >= std::pow(lam, 1.0 + 1.0 / k3) * c_full - 1e-12);
    }
}

TEST_CASE("report identities and translation invariance") {
    const SteadyState& st = state();
    auto ens = sample_f0(st, 8000, 5);
    const auto rep = energy_casimir(ens, st.casimir());
    CHECK(rep.h_c == rep.casimir_value + rep.e_kin + rep.e_pot);
    CHECK(rep.p_value == rep.casimir_value + rep.e_kin);

    auto shifted = ens;
    const Vec3 b{1.7, -2.1, 0.4};
    for (auto& p : shifted.pos) p += b;
    const auto rep2 = energy_casimir(shifted, st.casimir());
    CHECK(rep2.e_kin == rep.e_kin);
    CHECK(rep2.casimir_value == rep.casimir_value);
    CHECK(rep2.e_pot == doctest::Approx(rep.e_pot).epsilon(1e-12));
}

TEST_CASE("d distance: zero at the steady realization, mass guard") {
    const SteadyState& st = state();
    const auto ens = sample_f0(st, 50000, 66);
    const auto d = d_distance_stats(ens, st);
    CHECK(std::abs(d.value) <= 5.0 * d.stderr_est);

    auto wrong = ens;
    for (auto& w : wrong.weight) w *= 1.5;
    CHECK_THROWS_AS(d_distance(wrong, st), numeric_error);
}

TEST_CASE("field distance: translation covariance and far separation") {
    const SteadyState& st = state();
    const auto ens = sample_f0(st, 20000, 77, {.antithetic = true});
    const double f_at0 = field_distance(ens, st, {});
    CHECK(std::abs(f_at0) <= 5e-3 * (-2.0 * st.e_pot0()));

    const Vec3 b{0.13, -0.05, 0.21};
    auto moved = ens;
    for (auto& p : moved.pos) p += b;
    CHECK(field_distance(moved, st, b) == doctest::Approx(f_at0).epsilon(1e-9));

    // two-center expansion: field -> -2 E_pot - M^2/|b| + o(1/|b|)
    const double far = 12.0 * st.radius();
    auto distant = ens;
    for (auto& p : distant.pos) p.x += far;
    const double expect = -2.0 * st.e_pot0() - st.mass() * st.mass() / far;
    CHECK(field_distance(distant, st, {}) == doctest::Approx(expect).epsilon(2e-3));
}

TEST_CASE("energy split identity on perturbed states") {
    const SteadyState& st = state();
    Perturbation boost;
    boost.kind = Perturbation::Kind::boost;
    boost.boost_v = {0.1, 0, 0};
    const auto ens = perturb(st, boost, 10000, 8);
    CHECK(dd_identity_check(ens, st, {}) <= 1e-3);
    CHECK(dd_identity_check(ens, st, {0.2 * st.radius(), 0, 0}) <= 1e-3);

    const auto exact = sample_f0(st, 10000, 9);
    CHECK(dd_identity_check(exact, st, {}) <= 1e-6);
}

TEST_CASE("L^p norms: mass, indicator ball, Holder interpolation") {
    const SteadyState& st = state();
    CHECK(lp_norm(st, 1.0) == doctest::Approx(st.mass()).epsilon(1e-8));

    // indicator ball of radius 1 and mass m: |rho|_p = m (3/(4 pi))^(1-1/p)
    const double m = 2.0;
    const double rho_c = 3.0 * m / (4.0 * pi);
    for (double p : {1.0, 1.2, 2.0, 3.0}) {
        // quadrature route shared with the steady norms
        const double h = 1.0 / 4096;
        std::vector<double> a(4097);
        for (std::size_t j = 0; j < a.size(); ++j) {
            const double r = h * double(j);
            a[j] = 4.0 * pi * r * r * std::pow(rho_c, p);
        }
        const double norm_p = std::pow(cumulative_from_values(a, h).back(), 1.0 / p);
        CHECK(norm_p ==
              doctest::Approx(m * std::pow(3.0 / (4.0 * pi), 1.0 - 1.0 / p)).epsilon(1e-10));
    }

    // Holder: |rho|_{6/5} <= |rho|_1^{1-theta} |rho|_{1+1/n1}^theta
    for (double k : {0.5, 1.0}) {
        const SteadyState s = build_steady(CasimirFunction::polytropic(k), 1.0);
        const double n1 = s.casimir().n1();
        const double theta = (n1 + 1.0) / 6.0;
        const double lhs = lp_norm(s, 1.2);
        const double rhs =
            std::pow(lp_norm(s, 1.0), 1 - theta) * std::pow(lp_norm(s, 1 + 1 / n1), theta);
        CHECK(lhs <= rhs * (1 + 1e-10));
    }

    // ensemble KDE norm is diagnostic quality only
    const auto ens = sample_f0(st, 50000, 99);
    CHECK(lp_norm_kde(ens, 1.2) == doctest::Approx(lp_norm(st, 1.2)).epsilon(0.15));
}

TEST_CASE("cut-off energy identity by independent quadrature") {
    const SteadyState& st = state();
    CHECK(std::abs(e0_identity(st) - st.e0()) <= 1e-4 * std::abs(st.e0()));
}
