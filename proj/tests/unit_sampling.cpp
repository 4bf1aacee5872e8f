#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vpstab/math/quadrature.hpp"
#include "vpstab/sample.hpp"
#include "vpstab/steady.hpp"

using namespace vpstab;

namespace {
const SteadyState& state() {
    static const SteadyState st = build_steady(CasimirFunction::polytropic(1.0), 1.0);
    return st;
}
}  // namespace

TEST_CASE("weights carry the exact total mass") {
    const auto ens = sample_f0(state(), 5000, 1);
    CHECK(ens.size() == 5000);
    for (double w : ens.weight) CHECK(w == 1.0 / 5000);
    CHECK(ens.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("deterministic for a seed, different across seeds") {
    const auto a = sample_f0(state(), 2000, 7);
    const auto b = sample_f0(state(), 2000, 7);
    const auto c = sample_f0(state(), 2000, 8);
    bool identical = true, differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        identical = identical && a.pos[i].x == b.pos[i].x && a.vel[i].z == b.vel[i].z;
        differs = differs || a.pos[i].x != c.pos[i].x;
    }
    CHECK(identical);
    CHECK(differs);
}

TEST_CASE("radial mass profile matches the quadrature of rho0 within 3 sigma") {
    const SteadyState& st = state();
    const std::size_t n = 100000;
    const auto ens = sample_f0(st, n, 123);
    // enclosed-mass fractions at a few radii from the density quadrature
    for (double frac : {0.25, 0.5, 0.75, 0.9}) {
        const double r_q = frac * st.radius();
        const double p = 4.0 * pi *
                         integrate_uniform([&](double r) { return r * r * st.rho0(r); }, 0.0,
                                           r_q, 2048) /
                         st.mass();
        std::size_t count = 0;
        for (const auto& x : ens.pos)
            if (norm(x) <= r_q) ++count;
        const double sigma = std::sqrt(double(n) * p * (1 - p));
        CHECK(std::abs(double(count) - p * double(n)) <= 3.0 * sigma + 1.0);
    }
}

TEST_CASE("velocity isotropy: empirical mean within 3 sigma of zero") {
    const std::size_t n = 100000;
    const auto ens = sample_f0(state(), n, 3131);
    Vec3 mean{};
    double v2 = 0;
    for (const auto& v : ens.vel) {
        mean += (1.0 / double(n)) * v;
        v2 += norm2(v) / double(n);
    }
    const double sigma1 = std::sqrt(v2 / 3.0 / double(n));
    CHECK(std::abs(mean.x) <= 3 * sigma1);
    CHECK(std::abs(mean.y) <= 3 * sigma1);
    CHECK(std::abs(mean.z) <= 3 * sigma1);
}

TEST_CASE("antithetic pairing cancels the first moments exactly") {
    const auto ens = sample_f0(state(), 10000, 5, {.antithetic = true});
    CHECK(norm(ens.momentum()) == 0.0);
    CHECK(norm(ens.center_of_mass()) == 0.0);
    SampleOptions odd;
    odd.antithetic = true;
    CHECK_THROWS_AS(sample_f0(state(), 10001, 5, odd), config_error);
}

TEST_CASE("carried f-values equal f0 at the sampled points") {
    const auto ens = sample_f0(state(), 1000, 99);
    for (std::size_t i = 0; i < ens.size(); i += 37)
        CHECK(ens.f_init[i] ==
              doctest::Approx(state().f0(ens.pos[i], ens.vel[i])).epsilon(1e-12));
}

TEST_CASE("an unattainable efficiency floor is reported") {
    SampleOptions so;
    so.efficiency_floor = 0.99;
    CHECK_THROWS_AS(sample_f0(state(), 2000, 1, so), numeric_error);
}

TEST_CASE("multiplier biases the radial distribution the expected way") {
    // density tilted outward: mean radius must grow
    const SteadyState& st = state();
    SampleOptions so;
    so.multiplier = [&](const Vec3& x, const Vec3&) { return 1.0 + 0.8 * norm(x) / st.radius(); };
    so.multiplier_sup = 1.8;
    const auto tilted = sample_f0(st, 40000, 17, so);
    const auto plain = sample_f0(st, 40000, 17);
    double mr_t = 0, mr_p = 0;
    for (std::size_t i = 0; i < tilted.size(); ++i) {
        mr_t += norm(tilted.pos[i]) / double(tilted.size());
        mr_p += norm(plain.pos[i]) / double(plain.size());
    }
    CHECK(mr_t > mr_p * 1.02);
}
