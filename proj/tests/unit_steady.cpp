#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "vpstab/functionals.hpp"
#include "vpstab/math/fit.hpp"
#include "vpstab/shoot.hpp"
#include "vpstab/steady.hpp"

using namespace vpstab;

namespace {

// Independent oracle for the radial equation: fixed-step RK4 marched from a
// plain quadratic series start, root located by linear interpolation on a
// fine grid, Richardson-extrapolated over step halving. Shares no code with
// the library integrator.
struct OracleResult {
    double R, M;
};

OracleResult oracle_shoot_once(double k, double z0, double h) {
    const double ck = polytrope_constant(k);
    auto g = [&](double z) { return z > 0 ? ck * std::pow(z, k + 1.5) : 0.0; };
    auto rhs = [&](double r, std::array<double, 2> y) -> std::array<double, 2> {
        if (r <= 0) return {y[1], -g(y[0]) / 3.0};
        return {y[1], -g(y[0]) - 2.0 * y[1] / r};
    };
    double r = h;
    std::array<double, 2> y = {z0 - g(z0) / 6.0 * h * h, -g(z0) / 3.0 * h};
    double r_prev = r;
    std::array<double, 2> y_prev = y;
    while (y[0] > 0 && r < 1e4) {
        r_prev = r;
        y_prev = y;
        auto k1 = rhs(r, y);
        auto k2 = rhs(r + h / 2, {y[0] + h / 2 * k1[0], y[1] + h / 2 * k1[1]});
        auto k3 = rhs(r + h / 2, {y[0] + h / 2 * k2[0], y[1] + h / 2 * k2[1]});
        auto k4 = rhs(r + h, {y[0] + h * k3[0], y[1] + h * k3[1]});
        y = {y[0] + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
             y[1] + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
        r += h;
    }
    const double frac = y_prev[0] / (y_prev[0] - y[0]);
    const double root = r_prev + frac * h;
    const double dz_root = y_prev[1] + frac * (y[1] - y_prev[1]);
    return {root, -root * root * dz_root};
}

OracleResult oracle_shoot(double k, double z0) {
    // Richardson over h, h/2 (4th order)
    const double h = 2e-4;
    const auto a = oracle_shoot_once(k, z0, h);
    const auto b = oracle_shoot_once(k, z0, h / 2);
    return {b.R + (b.R - a.R) / 15.0, b.M + (b.M - a.M) / 15.0};
}

}  // namespace

TEST_CASE("shooter agrees with the independent oracle integrator") {
    const auto sol = emden_fowler_shoot(1.0, 1.0);
    const auto orc = oracle_shoot(1.0, 1.0);
    CHECK(std::abs(sol.R - orc.R) <= 1e-8);
    CHECK(std::abs(sol.M - orc.M) <= 1e-8);
    // oracle-pinned values, frozen
    CHECK(sol.R == doctest::Approx(0.981397807217).epsilon(1e-9));
    CHECK(sol.M == doctest::Approx(0.400822119044).epsilon(1e-9));
    CHECK(sol.dz.back() < 0.0);
    // z strictly decreasing
    for (std::size_t j = 1; j < sol.z.size(); ++j) CHECK(sol.z[j] < sol.z[j - 1] + 1e-15);
    CHECK(sol.z.front() == 1.0);
    CHECK(sol.dz.front() == 0.0);
}

TEST_CASE("scaling family: R ratio and mass exponent") {
    const auto s1 = emden_fowler_shoot(1.0, 1.0);
    const auto s2 = emden_fowler_shoot(1.0, 2.0);
    CHECK(s2.R / s1.R == doctest::Approx(std::pow(2.0, -0.75)).epsilon(1e-10));
    CHECK(s2.M / s1.M == doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-10));

    // M(z0) decreases monotonically to 0 with exponent (3-2k)/4 = 1/4 at k=1
    double prev_m = 1e300;
    std::vector<double> z0s = {1.0, 0.5, 0.25, 0.125}, ms;
    for (double z0 : z0s) {
        const double m = emden_fowler_shoot(1.0, z0).M;
        CHECK(m < prev_m);
        prev_m = m;
        ms.push_back(m);
    }
    CHECK(fit_power_law(z0s, ms).slope == doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("scaling family closure: rescale vs re-shoot") {
    const auto base = emden_fowler_shoot(1.0, 1.0);
    for (double alpha : {0.5, 2.0, 4.0}) {
        const double gamma = scaling_gamma(1.0);
        const auto reshot = emden_fowler_shoot(1.0, alpha * base.z0());
        // z_alpha(r) = alpha z(alpha^gamma r) compared on the re-shot grid
        const HermiteTable zt(0.0, base.R, base.z, base.dz);
        for (std::size_t j = 0; j + 1 < reshot.r.size(); j += 97) {
            const double r = reshot.r[j];
            const double expected = alpha * zt(std::pow(alpha, gamma) * r);
            CHECK(reshot.z[j] == doctest::Approx(expected).epsilon(1e-6));
        }
        CHECK(reshot.R == doctest::Approx(std::pow(alpha, -gamma) * base.R).epsilon(1e-9));
    }
}

TEST_CASE("scale_to_mass: identity, exponent arithmetic, round trip") {
    const auto sol = emden_fowler_shoot(1.0, 1.0);
    const auto same = scale_to_mass(sol, sol.M);
    CHECK(same.R == doctest::Approx(sol.R).epsilon(1e-14));
    CHECK(same.z[100] == doctest::Approx(sol.z[100]).epsilon(1e-14));

    const auto doubled = scale_to_mass(sol, std::pow(2.0, 0.25) * sol.M);
    CHECK(doubled.z0() == doctest::Approx(2.0 * sol.z0()).epsilon(1e-12));
    CHECK(doubled.R == doctest::Approx(std::pow(2.0, -0.75) * sol.R).epsilon(1e-12));

    const auto round = scale_to_mass(scale_to_mass(sol, 3.7), sol.M);
    CHECK(round.M == doctest::Approx(sol.M).epsilon(1e-10));
    for (std::size_t j = 0; j < sol.z.size(); j += 511)
        CHECK(round.z[j] == doctest::Approx(sol.z[j]).epsilon(1e-10));

    RadialSolution general = sol;
    general.k = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(scale_to_mass(general, 1.0), numeric_error);
}

TEST_CASE("input validation of the shooter") {
    CHECK_THROWS_AS(emden_fowler_shoot(2.0, 1.0), config_error);
    CHECK_THROWS_AS(emden_fowler_shoot(1.0, -1.0), config_error);
}

TEST_CASE("built steady state satisfies its invariants") {
    for (double k : {0.5, 1.0}) {
        const SteadyState st = build_steady(CasimirFunction::polytropic(k), 1.0);
        CHECK(st.e0() < 0);
        CHECK(st.mass() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(st.h_m() < 0);
        CHECK(st.virial_residual() <= 1e-3);

        // U0 increasing, exterior matching, far-field decay
        double prev = st.u0(0);
        for (int i = 1; i <= 64; ++i) {
            const double u = st.u0(st.r_max() * i / 64.0);
            CHECK(u >= prev - 1e-14);
            prev = u;
        }
        CHECK(std::abs(st.u0(2.0 * st.radius()) + st.mass() / (2.0 * st.radius())) <= 1e-14);
        CHECK(std::abs(st.u0(100.0 * st.radius())) <= st.mass() / (99.0 * st.radius()));

        // lower potential bound -U0(x) >= M/(3|x|) for |x| >= 2R
        const double x = 2.5 * st.radius();
        CHECK(-st.u0(x) * x >= st.mass() / 3.0);

        // rho0 = h_phi(U0) nodewise (closed form vs adaptive quadrature)
        double worst = 0;
        for (int i = 0; i < 64; ++i) {
            const double r = st.radius() * i / 64.0;
            const double rho = st.rho0(r);
            if (rho < 1e-12 * st.rho_central()) continue;
            worst = std::max(worst,
                             std::abs(rho - h_phi_eval(st.casimir(), st.e0(), st.u0(r))) / rho);
        }
        CHECK(worst <= 1e-6);

        // mass consistency: quadrature of rho0 against the matched M
        const double m_quad = 4.0 * pi * integrate_uniform(
            [&](double r) { return r * r * st.rho0(r); }, 0.0, st.radius(), 4096);
        CHECK(m_quad == doctest::Approx(st.mass()).epsilon(1e-8));
    }
}

TEST_CASE("f0 evaluation: cut-off, maximum, rotations") {
    const SteadyState st = build_steady(CasimirFunction::polytropic(1.0), 1.0);
    CHECK(st.f0({0.01, 0, 0}, {10.0, 0, 0}) == 0.0);
    CHECK(st.f0({0, 0, 0}, {0, 0, 0}) ==
          doctest::Approx(st.casimir().qprime_inverse(st.e0() - st.u0(0))));
    CHECK(st.f0({0, 0, 0}, {0, 0, 0}) == st.f0_max());

    const Vec3 x{0.01, -0.02, 0.005}, v{1.0, 2.0, -0.5};
    // rotations that keep the norm's floating-point summation order are exact
    CHECK(st.f0({x.y, x.x, -x.z}, {v.y, v.x, -v.z}) == st.f0(x, v));
    CHECK(st.f0({-x.x, -x.y, x.z}, {-v.x, -v.y, v.z}) == st.f0(x, v));
    // a generic rotation agrees to rounding
    const double c = std::cos(0.7), s = std::sin(0.7);
    const Vec3 xr{c * x.x - s * x.y, s * x.x + c * x.y, x.z};
    const Vec3 vr{c * v.x - s * v.y, s * v.x + c * v.y, v.z};
    CHECK(st.f0(xr, vr) == doctest::Approx(st.f0(x, v)).epsilon(1e-12));

    // outside the support radius the cut-off wins even at v=0
    CHECK(st.f0({1.1 * st.radius(), 0, 0}, {0, 0, 0}) == 0.0);
}

TEST_CASE("general Q: build by mass bisection, same invariants") {
    const auto cas = CasimirFunction::two_term(0.8, 1.2, 0.5, 100.0);
    const SteadyState st = build_steady(cas, 0.5);
    CHECK(st.mass() == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(st.e0() < 0);
    CHECK(st.h_m() < 0);
    CHECK(st.virial_residual() <= 1e-6);
    CHECK(std::abs(st.e_pot0() - st.e_pot0_double()) / std::abs(st.e_pot0()) <= 1e-6);
    double worst = 0;
    for (int i = 0; i < 32; ++i) {
        const double r = st.radius() * i / 32.0;
        const double rho = st.rho0(r);
        if (rho < 1e-9 * st.rho_central()) continue;
        worst = std::max(worst,
                         std::abs(rho - h_phi_eval(st.casimir(), st.e0(), st.u0(r))) / rho);
    }
    CHECK(worst <= 1e-5);  // limited by the tabulated-profile interpolation
}

TEST_CASE("general Q: declared envelope constants are checked") {
    auto cs = CasimirFunction::two_term(0.8, 1.2, 0.5, 100.0).constants();
    cs.c1_prime = 1e-9;  // absurdly small: phi <= C1'(E0-E)^k1 must fail
    const auto q = [](double f) {
        return f <= 0 ? 0.0 : std::pow(f, 1 + 1 / 0.8) + 0.5 * std::pow(f, 1 + 1 / 1.2);
    };
    const auto qp = [](double f) {
        return f <= 0 ? 0.0
                      : (1 + 1 / 0.8) * std::pow(f, 1 / 0.8) +
                            0.5 * (1 + 1 / 1.2) * std::pow(f, 1 / 1.2);
    };
    const auto bad = CasimirFunction::tabulated(q, qp, 100.0, cs);
    CHECK_THROWS_AS(build_steady(bad, 0.5), numeric_error);
}

TEST_CASE("fault injection: a tampered polytropic constant is caught") {
    BuildOptions opts;
    opts.ck_scale = 1.01;
    const SteadyState bad = build_steady(CasimirFunction::polytropic(1.0), 1.0, opts);
    CHECK(bad.virial_residual() > 1e-3);
    double worst = 0;
    for (int i = 0; i < 32; ++i) {
        const double r = bad.radius() * i / 32.0;
        const double rho = bad.rho0(r);
        if (rho < 1e-9 * bad.rho_central()) continue;
        worst = std::max(worst,
                         std::abs(rho - h_phi_eval(bad.casimir(), bad.e0(), bad.u0(r))) / rho);
    }
    CHECK(worst > 1e-6);
}
