#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vpstab/casimir.hpp"
#include "vpstab/hphi.hpp"

using namespace vpstab;

TEST_CASE("polytropic (Q')^{-1}") {
    const auto c1 = CasimirFunction::polytropic(1.0);
    CHECK(c1.qprime_inverse(3.0) == doctest::Approx(1.5).epsilon(1e-15));  // Q'=2f
    CHECK(c1.qprime_inverse(-2.0) == 0.0);
    CHECK(c1.qprime_inverse(0.0) == 0.0);

    // forward composition recovers the argument
    const auto chalf = CasimirFunction::polytropic(0.5);
    for (double s : {1e-3, 0.1, 1.0, 7.0, 250.0})
        CHECK(chalf.qprime(chalf.qprime_inverse(s)) == doctest::Approx(s).epsilon(1e-12));
    CHECK(chalf.qprime_inverse(1.0) ==
          doctest::Approx(std::pow(0.5 / 1.5, 0.5)).epsilon(1e-14));

    // monotone nondecreasing in s
    double prev = -1;
    for (int i = 0; i <= 100; ++i) {
        const double v = c1.qprime_inverse(-1.0 + 0.3 * i);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("polytropic constants and range checks") {
    CHECK_THROWS_AS(CasimirFunction::polytropic(0.0), config_error);
    CHECK_THROWS_AS(CasimirFunction::polytropic(1.5), config_error);
    CHECK_THROWS_AS(polytrope_constant(2.0), config_error);
    const auto cas = CasimirFunction::polytropic(0.75);
    CHECK(cas.assumption_margin() >= -1e-12);
    CHECK(cas.n1() == doctest::Approx(0.75 + 1.5));
}

TEST_CASE("tabulated two-term Q behaves like its closed form") {
    const double ka = 0.8, kb = 1.2, beta = 0.5;
    const auto cas = CasimirFunction::two_term(ka, kb, beta, 50.0);
    auto q_exact = [&](double f) {
        return std::pow(f, 1 + 1 / ka) + beta * std::pow(f, 1 + 1 / kb);
    };
    auto qp_exact = [&](double f) {
        return (1 + 1 / ka) * std::pow(f, 1 / ka) + beta * (1 + 1 / kb) * std::pow(f, 1 / kb);
    };
    for (double f : {0.05, 0.3, 1.0, 4.0, 20.0, 45.0}) {
        CHECK(cas.q(f) == doctest::Approx(q_exact(f)).epsilon(1e-6));
        CHECK(cas.qprime(f) == doctest::Approx(qp_exact(f)).epsilon(1e-6));
    }
    // inverse against the exact forward map
    for (double s : {0.1, 1.0, 5.0, 40.0})
        CHECK(qp_exact(cas.qprime_inverse(s)) == doctest::Approx(s).epsilon(1e-6));
    CHECK(cas.qprime_inverse(-1.0) == 0.0);
    // equality-tight inequalities hold up to the table interpolation error
    CHECK(cas.assumption_margin() >= -1e-7);
    CHECK_THROWS_AS(cas.qprime_inverse(1e9), numeric_error);  // above the tabulated range
}

TEST_CASE("assumption checks reject a non-convex table") {
    auto bad_q = [](double f) { return f < 1 ? f * f : 2 * f - 1 - 0.3 * (f - 1) * (f - 1); };
    auto bad_qp = [](double f) { return f < 1 ? 2 * f : 2 - 0.6 * (f - 1); };
    CasimirFunction::Constants cs;
    cs.k1 = cs.k2 = cs.k3 = 1.0;
    CHECK_THROWS_AS(CasimirFunction::tabulated(bad_q, bad_qp, 10.0, cs), config_error);
}

TEST_CASE("h_phi: cut-off, closed form, and the polytropic constant") {
    const double e0 = -1.0;
    const auto cas = CasimirFunction::polytropic(1.0);
    CHECK(h_phi_eval(cas, e0, e0) == 0.0);
    CHECK(h_phi_eval(cas, e0, e0 + 1.0) == 0.0);

    // 4 pi h_phi(u) = c_k (E0-u)^(k+3/2), pinned against the adaptive
    // quadrature of the defining integral
    for (double k : {0.1, 0.75, 1.4}) {
        const auto ck = polytrope_constant(k);
        CHECK(ck > 0);
        CHECK(std::isfinite(ck));
        const auto c = CasimirFunction::polytropic(k);
        double ratio0 = 0;
        for (double u : {-1.0 + 0.1, -0.7, -0.4, -0.2, -0.05}) {
            if (u >= e0) continue;
            const double ratio =
                4.0 * pi * h_phi_eval(c, e0, u) / std::pow(e0 - u, k + 1.5);
            if (ratio0 == 0) ratio0 = ratio;
            CHECK(ratio == doctest::Approx(ck).epsilon(1e-8));
            CHECK(ratio == doctest::Approx(ratio0).epsilon(1e-8));
        }
    }

    // k=1, E0=-1, u=-2: the closed form c_1 (E0-u)^(5/2) / (4 pi)
    CHECK(h_phi_eval(cas, -1.0, -2.0) ==
          doctest::Approx(polytrope_constant(1.0) / (4.0 * pi)).epsilon(1e-10));

    // the reduction is linear in the profile: doubling phi doubles the density
    auto phi = [&](double e) { return cas.qprime_inverse(-1.0 - e); };
    const double one = velocity_reduce(phi, -2.0, -1.0);
    const double two = velocity_reduce([&](double e) { return 2.0 * phi(e); }, -2.0, -1.0);
    CHECK(two == doctest::Approx(2.0 * one).epsilon(1e-12));
}

TEST_CASE("density profile: polytropic closed form matches quadrature table") {
    const auto cas = CasimirFunction::two_term(0.9, 1.1, 0.25, 40.0);
    const auto prof = DensityProfile::tabulated(cas, 2.0);
    for (double z : {0.05, 0.5, 1.0, 1.9})
        CHECK(prof(z) == doctest::Approx(h_phi_eval(cas, z, 0.0)).epsilon(1e-7));
    CHECK(prof(0.0) == 0.0);
    CHECK(prof(-1.0) == 0.0);
}
