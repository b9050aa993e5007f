#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "agestruct/linear.hpp"
#include "agestruct/scenario.hpp"
#include "agestruct/simulate.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace agestruct;

namespace {

// constant fertility b on the fertile window, constant mortality m everywhere
LinearModel toy_model(const AgeGrid& g, double b, double m) {
    LinearModel lm;
    lm.grid = &g;
    lm.beta_c.assign(g.n, 0.0);
    lm.mu_c.assign(g.n, m);
    for (std::size_t j = 0; j < g.n; ++j) {
        const double a = g.center(j);
        if (a > g.a_min && a < g.a_max) lm.beta_c[j] = b;
    }
    return lm;
}

}  // namespace

TEST_CASE("offspring count and growth exponent match closed forms") {
    AgeGrid g(80.0, 0.1, 15.0, 35.0);
    // b integral of e^{-m a} over [15, 35] = (b/m)(e^{-15m} - e^{-35m})
    LinearModel decl = toy_model(g, 0.1, 0.05);
    CHECK(r0_linear(decl) == doctest::Approx(0.597185218581).epsilon(1e-5));
    CHECK(lotka_root(decl) == doctest::Approx(-0.0217432254668).epsilon(1e-5));
    CHECK(lotka_root(decl) < 0.0);

    LinearModel grow = toy_model(g, 0.3, 0.05);
    CHECK(r0_linear(grow) == doctest::Approx(1.79155565574).epsilon(1e-5));
    CHECK(lotka_root(grow) == doctest::Approx(0.0253901978409).epsilon(1e-5));
    CHECK(lotka_root(grow) > 0.0);

    // at the replacement rate the exponent vanishes
    LinearModel flat = toy_model(g, 0.1 / 0.597185218581, 0.05);
    CHECK(std::abs(lotka_root(flat)) <= 1e-6);
}

TEST_CASE("the discounted offspring count is decreasing and pins the root") {
    AgeGrid g(80.0, 0.1, 15.0, 35.0);
    LinearModel lm = toy_model(g, 0.3, 0.05);
    CHECK(discounted_r0(lm, 0.0) == doctest::Approx(r0_linear(lm)).epsilon(1e-14));
    CHECK(discounted_r0(lm, 0.0) > discounted_r0(lm, 0.05));
    CHECK(discounted_r0(lm, 0.05) > discounted_r0(lm, 0.1));
    CHECK(discounted_r0(lm, lotka_root(lm)) == doctest::Approx(1.0).epsilon(1e-10));

    LinearModel barren = toy_model(g, 0.0, 0.05);
    CHECK_THROWS_AS(lotka_root(barren), domain_error);
}

TEST_CASE("freezing at zero population reproduces the growth constant") {
    AgeGrid g(80.0, 0.1, 15.0, 35.0);
    for (const char* name : {"example-4-1", "table1-baseline", "example-4-1-subcritical"}) {
        Scenario sc = testutil::preset(name);
        LinearModel lm = frozen_model(sc.rates, g, 0.0, 0.0);
        INFO("scenario ", std::string(name));
        CHECK(r0_linear(lm) == doctest::Approx(igc(sc.rates, g)).epsilon(1e-12));
    }
}

TEST_CASE("feedback-free dynamics agree with the frozen model bit for bit") {
    Scenario sc = testutil::preset("example-4-1");
    AgeGrid g = sc.grid();
    Rates zfree = sc.rates;
    zfree.mu0.slope = AgeProfile{};
    zfree.mu1.slope = AgeProfile{};
    std::vector<double> p0 = sc.initial.build(g);

    TrajectoryRecord nonlinear = simulate(zfree, g, p0, 5.0);
    TrajectoryRecord linear = simulate_linear(frozen_model(zfree, g, 0.0, 0.0), p0, 5.0);
    REQUIRE(nonlinear.rows.size() == linear.rows.size());
    for (std::size_t i = 0; i < nonlinear.rows.size(); ++i) {
        CHECK(nonlinear.rows[i].B == linear.rows[i].B);
        CHECK(nonlinear.rows[i].T == linear.rows[i].T);
        CHECK(nonlinear.rows[i].J == linear.rows[i].J);
        CHECK(nonlinear.rows[i].S == linear.rows[i].S);
    }
    for (std::size_t j = 0; j < g.n; ++j)
        CHECK(nonlinear.final_density[j] == linear.final_density[j]);
}

TEST_CASE("renewal runs converge to the projected age profile") {
    Scenario sc = testutil::preset("example-4-1");
    AgeGrid g = sc.grid();
    LinearModel lm = frozen_model(sc.rates, g, 0.0, 0.0);
    std::vector<double> p0 = sc.initial.build(g);
    AsymptoticProfile ap = asymptotic_profile(lm, p0);
    CHECK(ap.lambda0 == doctest::Approx(lotka_root(lm)).epsilon(1e-12));
    CHECK(ap.coefficient > 0.0);
    CHECK_FALSE(ap.boundary_class);
    REQUIRE(ap.profile.size() == g.n);

    const double norm = integrate(g, ap.profile);
    for (double t_end : {100.0, 200.0}) {
        TrajectoryRecord run = simulate_linear(lm, p0, t_end);
        const double scale = std::exp(-ap.lambda0 * t_end);
        std::vector<double> diff(g.n);
        for (std::size_t j = 0; j < g.n; ++j)
            diff[j] = std::abs(run.final_density[j] * scale - ap.profile[j]);
        INFO("t_end ", t_end);
        CHECK(integrate(g, diff) / norm <= (t_end < 150.0 ? 0.05 : 0.02));
    }

    // initial data entirely past the fertile ages projects to nothing
    std::vector<double> aged(g.n, 0.0);
    for (std::size_t j = 400; j < 500; ++j) aged[j] = 1.0;
    AsymptoticProfile bp = asymptotic_profile(lm, aged);
    CHECK(bp.boundary_class);
    CHECK(bp.coefficient == 0.0);
}

TEST_CASE("renewable-class membership and persistence") {
    Scenario sc = testutil::preset("example-4-1");
    AgeGrid g = sc.grid();
    LinearModel lm = frozen_model(sc.rates, g, 0.0, 0.0);
    CHECK(fertility_support_bound(lm) == 35.0);

    std::vector<double> young(g.n, 0.0);
    young[50] = 10.0;  // a cohort aged ~5, fertile from t ~ 10 on
    CHECK(in_renewable_class(lm, young));
    PersistenceReport pr = persistence_check(lm, young, 60.0);
    CHECK(pr.entered);
    CHECK(pr.first_positive_t == doctest::Approx(10.0).epsilon(1e-2));
    CHECK(pr.persistent);
    CHECK(pr.min_after > 0.0);

    std::vector<double> aged(g.n, 0.0);
    aged[400] = 10.0;  // past the fertile window: no births, ever
    CHECK_FALSE(in_renewable_class(lm, aged));
    PersistenceReport po = persistence_check(lm, aged, 60.0);
    CHECK_FALSE(po.entered);
    CHECK_FALSE(po.persistent);
    CHECK(po.min_after == 0.0);

    LinearModel barren = toy_model(g, 0.0, 0.05);
    CHECK(fertility_support_bound(barren) == 0.0);
    CHECK_FALSE(in_renewable_class(barren, young));
}

TEST_CASE("envelope models bracket the growth constant") {
    Scenario sc = testutil::preset("example-4-1");
    AgeGrid g = sc.grid();
    Envelopes env = comparison_envelopes(sc.rates, g, sc.ceilings.q0, sc.ceilings.q1);
    const double r0_lo = r0_linear(env.lower);
    const double r0_hi = r0_linear(env.upper);
    CHECK(r0_lo <= igc(sc.rates, g));
    CHECK(r0_hi == doctest::Approx(igc(sc.rates, g)).epsilon(1e-12));
    CHECK(r0_lo < r0_hi);
    CHECK(env.lower.cap0 == sc.ceilings.q0);
}

TEST_CASE("envelopes require monotone population feedback") {
    AgeGrid g(80.0, 0.1, 15.0, 35.0);
    // hump-shaped fertility modulation rises with the population at first
    Scenario fx = testutil::preset("multi-equilibrium-fixture");
    CHECK_THROWS_AS(comparison_envelopes(fx.rates, g, 1e4, 1e4), domain_error);
    // mortality falling with the population also breaks the ordering
    Scenario ex = testutil::preset("example-4-1");
    Rates bad = ex.rates;
    bad.mu0.slope.kind = AgeProfile::Kind::constant;
    bad.mu0.slope.p0 = -1e-6;
    CHECK_THROWS_AS(comparison_envelopes(bad, g, 1e4, 1e4), domain_error);
}

TEST_CASE("the nonlinear run stays inside the envelope sandwich") {
    Scenario sc = testutil::preset("example-4-1");
    AgeGrid g = sc.grid();
    std::vector<double> p0 = sc.initial.build(g);
    SandwichReport rep = sandwich_check(sc.rates, g, p0, 20.0, sc.ceilings.q0, sc.ceilings.q1);
    // the stepper is monotone, so the discrete bound holds exactly
    CHECK(rep.max_lower_violation <= 1e-12);
    CHECK(rep.max_upper_violation <= 1e-12);
    CHECK(rep.max_norm_violation <= 1e-12);
    CHECK(rep.norm_ordered);
    CHECK_FALSE(rep.cap_breached);
    CHECK(rep.t_end == 20.0);
    CHECK(rep.da == g.da);
    CHECK_THROWS_AS(sandwich_check(sc.rates, g, p0, 7.03, sc.ceilings.q0, sc.ceilings.q1),
                    domain_error);
}

TEST_CASE("renewal simulation validates its inputs") {
    AgeGrid g(80.0, 0.1, 15.0, 35.0);
    LinearModel lm = toy_model(g, 0.1, 0.05);
    std::vector<double> p0(g.n, 1.0);
    CHECK_THROWS_AS(simulate_linear(lm, p0, -1.0), domain_error);
    CHECK_THROWS_AS(simulate_linear(lm, p0, 0.05), domain_error);
    CHECK_THROWS_AS(simulate_linear(lm, std::vector<double>(g.n - 1, 1.0), 1.0), domain_error);
}
