#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "agestruct/lyapunov.hpp"
#include "agestruct/scenario.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace agestruct;

TEST_CASE("the expected-future-births functional is linear and monotone") {
    Scenario sc = testutil::preset("example-4-1-subcritical");
    AgeGrid g = sc.grid();
    std::vector<double> zero(g.n, 0.0);
    CHECK(v_trivial(sc.rates, g, zero) == 0.0);

    std::vector<double> p = sc.initial.build(g);
    const double v1 = v_trivial(sc.rates, g, p);
    CHECK(v1 > 0.0);
    std::vector<double> p2(g.n);
    for (std::size_t j = 0; j < g.n; ++j) p2[j] = 2.0 * p[j];
    CHECK(v_trivial(sc.rates, g, p2) == doctest::Approx(2.0 * v1).epsilon(1e-12));

    // more people below the fertile ages means more future births...
    std::vector<double> bumped = p;
    bumped[50] += 1.0;  // age ~5
    CHECK(v_trivial(sc.rates, g, bumped) > v1);
    // ...while people past them contribute nothing
    bumped = p;
    bumped[450] += 1.0;  // age ~45
    CHECK(v_trivial(sc.rates, g, bumped) == v1);

    CHECK_THROWS_AS(v_trivial(sc.rates, g, std::vector<double>(g.n - 1, 1.0)), domain_error);
}

TEST_CASE("the entropy functional vanishes exactly at its reference") {
    Scenario sc = testutil::preset("example-4-1");
    AgeGrid g = sc.grid();
    EquilibriumSolution sol = solve_equilibrium(sc.rates, g);
    CHECK(v_positive(g, sol.phi_hat, sol.phi_hat, LyapunovVariant::classical) == 0.0);
    CHECK(v_positive(g, sol.phi_hat, sol.phi_hat, LyapunovVariant::paper_form) == 0.0);
}

TEST_CASE("the two entropy variants coincide above the reference and split below") {
    Scenario sc = testutil::preset("example-4-1");
    AgeGrid g = sc.grid();
    EquilibriumSolution sol = solve_equilibrium(sc.rates, g);

    std::vector<double> above(g.n);
    for (std::size_t j = 0; j < g.n; ++j) above[j] = 1.5 * sol.phi_hat[j];
    CHECK(v_positive(g, above, sol.phi_hat, LyapunovVariant::classical) ==
          v_positive(g, above, sol.phi_hat, LyapunovVariant::paper_form));
    CHECK(v_positive(g, above, sol.phi_hat, LyapunovVariant::classical) > 0.0);

    std::vector<double> below(g.n);
    for (std::size_t j = 0; j < g.n; ++j) below[j] = sol.phi_hat[j] * std::exp(-1.0);
    CHECK(v_positive(g, below, sol.phi_hat, LyapunovVariant::classical) > 0.0);
    CHECK(v_positive(g, below, sol.phi_hat, LyapunovVariant::paper_form) < 0.0);
}

TEST_CASE("the entropy functional rejects nonpositive cells") {
    Scenario sc = testutil::preset("example-4-1");
    AgeGrid g = sc.grid();
    EquilibriumSolution sol = solve_equilibrium(sc.rates, g);
    std::vector<double> p = sol.phi_hat;
    p[10] = 0.0;
    CHECK_THROWS_AS(v_positive(g, p, sol.phi_hat, LyapunovVariant::classical), domain_error);
    p[10] = -1.0;
    CHECK_THROWS_AS(v_positive(g, p, sol.phi_hat, LyapunovVariant::classical), domain_error);
    CHECK_THROWS_AS(v_positive(g, p, sol.phi_hat, LyapunovVariant::paper_form), domain_error);
    CHECK_THROWS_AS(v_positive(g, sol.phi_hat, p, LyapunovVariant::classical), domain_error);
    CHECK_THROWS_AS(
        v_positive(g, std::vector<double>(g.n - 1, 1.0), sol.phi_hat, LyapunovVariant::classical),
        domain_error);
}

TEST_CASE("the discrete flow settles onto its own fixed point") {
    Scenario sc = testutil::preset("table1-baseline");
    AgeGrid g = sc.grid();
    EquilibriumSolution sol = solve_equilibrium(sc.rates, g);
    SettledProfile sp = settled_profile(sc.rates, g, sol.phi_hat);
    CHECK(sp.settled);
    CHECK(sp.residual <= 1e-13);
    CHECK(sp.steps < 200000);
    // the flow's fixed point sits O(da^2) away from the quadrature profile
    CHECK(weighted_total(g, sc.rates.omega0, sp.profile) ==
          doctest::Approx(sol.q0_hat).epsilon(1e-2));
    for (double v : sp.profile) CHECK(v > 0.0);
    CHECK_THROWS_AS(settled_profile(sc.rates, g, std::vector<double>(3, 1.0)), domain_error);
}

TEST_CASE("the births functional decreases along a dying population") {
    Scenario sc = testutil::preset("example-4-1-subcritical");
    AgeGrid g = sc.grid();
    TrajectoryRecord run = simulate(sc.rates, g, sc.initial.build(g), 200.0, 1.0);
    LyapunovTrace tr = lyapunov_trace(sc.rates, g, run, LyapunovKind::trivial);
    CHECK(tr.kind == LyapunovKind::trivial);
    REQUIRE(tr.values.size() == 201);
    CHECK(tr.max_upward_jump == 0.0);  // every yearly difference is negative
    CHECK(tr.monotone);
    CHECK(tr.values.front() > tr.values.back());
    for (std::size_t i = 1; i < 50; ++i) CHECK(tr.values[i] < tr.values[i - 1]);
    for (double v : tr.values) CHECK(v >= 0.0);
    // the default slack scales with the step and the rate bound
    CHECK(tr.tolerance ==
          doctest::Approx(10.0 * g.da * growth_constant(sc.rates, g, 0.0, 0.0)).epsilon(1e-12));
}

TEST_CASE("the entropy trace decreases toward the settled equilibrium") {
    Scenario sc = testutil::preset("table1-baseline");
    AgeGrid g = sc.grid();
    EquilibriumSolution sol = solve_equilibrium(sc.rates, g);
    SettledProfile sp = settled_profile(sc.rates, g, sol.phi_hat);
    REQUIRE(sp.settled);
    std::vector<double> p0(g.n);
    for (std::size_t j = 0; j < g.n; ++j) p0[j] = 1.05 * sp.profile[j];

    TrajectoryRecord run = simulate(sc.rates, g, p0, 60.0, 1.0);
    LyapunovTrace tr = lyapunov_trace(sc.rates, g, run, LyapunovKind::positive);
    CHECK(tr.kind == LyapunovKind::positive);
    REQUIRE(tr.values.size() == 61);
    CHECK(tr.values_paper.size() == 61);
    CHECK(tr.reference_settled);
    CHECK(tr.max_upward_jump <= 1e-9);
    CHECK(tr.monotone);
    CHECK(tr.values.front() > 0.0);
    CHECK(tr.values.back() < 0.2 * tr.values.front());
    for (double v : tr.values) CHECK(v >= 0.0);
}

TEST_CASE("trace evaluation needs snapshots and a live equilibrium") {
    Scenario sc = testutil::preset("table1-baseline");
    AgeGrid g = sc.grid();
    TrajectoryRecord bare = simulate(sc.rates, g, sc.initial.build(g), 2.0);
    CHECK_THROWS_AS(lyapunov_trace(sc.rates, g, bare, LyapunovKind::trivial), domain_error);

    Scenario sub = testutil::preset("example-4-1-subcritical");
    TrajectoryRecord srun = simulate(sub.rates, g, sub.initial.build(g), 2.0, 1.0);
    CHECK_THROWS_AS(lyapunov_trace(sub.rates, g, srun, LyapunovKind::positive), domain_error);
}

TEST_CASE("one-step entropy budget closes and bounds the quoted decay rate") {
    Scenario sc = testutil::preset("table1-baseline");
    AgeGrid g = sc.grid();
    EquilibriumSolution sol = solve_equilibrium(sc.rates, g);
    SettledProfile sp = settled_profile(sc.rates, g, sol.phi_hat);
    REQUIRE(sp.settled);

    std::vector<double> pert(g.n);
    for (std::size_t j = 0; j < g.n; ++j)
        pert[j] = sp.profile[j] * (1.0 + 0.05 * std::sin(2.0 * M_PI * g.center(j) / 80.0));

    for (double t : {5.0, 25.0, 100.0}) {
        TrajectoryRecord run = simulate(sc.rates, g, pert, t);
        DecayProbe pr = decay_identity_probe(sc.rates, g, run.final_density, sp.profile);
        INFO("probe at t = ", t);
        // the transport budget closes to quadrature accuracy
        CHECK(std::abs(pr.residual) <= 1e-3);
        CHECK(std::abs(pr.residual) < 1e-2 * std::abs(pr.claimed_rate));
        // the mortality-weighted bound undershoots the true one-step change
        CHECK(pr.claimed_rate <= 0.0);
        CHECK(pr.dv_dt >= pr.claimed_rate);
    }
    CHECK_THROWS_AS(decay_identity_probe(sc.rates, g, std::vector<double>(2, 1.0), sp.profile),
                    domain_error);
}
