#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "agestruct/core.hpp"
#include "agestruct/simulate.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace agestruct;

TEST_CASE("trajectory rows cover every step and bookkeep the windows") {
    Scenario sc = testutil::preset("table1-baseline");
    AgeGrid g = sc.grid();
    std::vector<double> p0 = sc.initial.build(g);
    TrajectoryRecord rec = simulate(sc.rates, g, p0, 5.0);
    REQUIRE(rec.rows.size() == 51);
    CHECK(rec.rows.front().t == 0.0);
    CHECK(rec.rows.back().t == doctest::Approx(5.0));
    for (const TrajectoryRow& row : rec.rows) {
        CHECK(row.T == row.J + row.R + row.S);  // exact by construction
        CHECK(row.J >= 0.0);
        CHECK(row.R >= 0.0);
        CHECK(row.S >= 0.0);
    }
    // the initial row reflects the initial data directly
    CHECK(rec.rows.front().B ==
          doctest::Approx(birth_functional(sc.rates, g, p0)).epsilon(1e-13));
    CHECK(rec.rows.front().Q0 ==
          doctest::Approx(weighted_total(g, sc.rates.omega0, p0)).epsilon(1e-13));
    Subpopulations sub = subpopulations(g, p0);
    CHECK(rec.rows.front().J == doctest::Approx(sub.J).epsilon(1e-13));
    CHECK(rec.rows.front().S == doctest::Approx(sub.S).epsilon(1e-13));
}

TEST_CASE("a single public step matches the first step of a run") {
    Scenario sc = testutil::preset("table1-baseline");
    AgeGrid g = sc.grid();
    std::vector<double> p0 = sc.initial.build(g);
    std::vector<double> one = step(sc.rates, g, p0, g.da);
    TrajectoryRecord rec = simulate(sc.rates, g, p0, g.da);
    REQUIRE(one.size() == rec.final_density.size());
    for (std::size_t j = 0; j < one.size(); ++j)
        CHECK(one[j] == doctest::Approx(rec.final_density[j]).epsilon(1e-14));
    CHECK_THROWS_AS(step(sc.rates, g, p0, 0.5 * g.da), domain_error);
}

TEST_CASE("cohorts shift by one cell per step and newborns enter at age zero") {
    Scenario sc = testutil::preset("example-4-1");
    AgeGrid g = sc.grid();
    std::vector<double> p0(g.n, 0.0);
    p0[100] = 7.0;  // a single cohort at age ~10, below the fertile window
    std::vector<double> p1 = step(sc.rates, g, p0, g.da);
    CHECK(p1[101] > 0.0);
    CHECK(p1[101] <= 7.0);  // decayed, never amplified
    CHECK(p1[100] == 0.0);
    CHECK(p1[0] == 0.0);  // no fertile mass, no newborns
    // mass beyond the last cell leaves the domain
    std::vector<double> tail(g.n, 0.0);
    tail[g.n - 1] = 3.0;
    std::vector<double> gone = step(sc.rates, g, tail, g.da);
    CHECK(integrate(g, gone) == 0.0);
}

TEST_CASE("subcritical populations die out") {
    Scenario sc = testutil::preset("example-4-1-subcritical");
    AgeGrid g = sc.grid();
    TrajectoryRecord rec = simulate(sc.rates, g, sc.initial.build(g), 500.0);
    CHECK(rec.rows.back().T < 1e-3);
    CHECK(rec.rows.back().T < rec.rows.front().T);
    CHECK(rec.positive);
}

TEST_CASE("supercritical runs stay positive and inside the growth bound") {
    for (const char* name : {"example-4-1", "table1-baseline"}) {
        Scenario sc = testutil::preset(name);
        AgeGrid g = sc.grid();
        TrajectoryRecord rec = simulate(sc.rates, g, sc.initial.build(g), 50.0, 0.0,
                                        sc.ceilings.q0, sc.ceilings.q1);
        INFO("scenario ", name);
        CHECK(rec.positive);
        CHECK(rec.min_cell == 0.0);
        CHECK(rec.growth_bound_ok);
        CHECK(rec.omega_bound > 0.0);
        CHECK(rec.rows.back().T > 0.0);
    }
}

TEST_CASE("snapshots land on the requested multiples and the final time") {
    Scenario sc = testutil::preset("table1-baseline");
    AgeGrid g = sc.grid();
    TrajectoryRecord rec = simulate(sc.rates, g, sc.initial.build(g), 5.0, 1.0);
    REQUIRE(rec.snapshots.size() == 6);
    for (long long k : {0LL, 10LL, 20LL, 30LL, 40LL, 50LL})
        CHECK(rec.snapshots.count(k) == 1);
    CHECK(rec.snapshots.at(50) == rec.final_density);
    // no snapshots when disabled
    CHECK(simulate(sc.rates, g, sc.initial.build(g), 1.0).snapshots.empty());
}

TEST_CASE("runs compose exactly across a split horizon") {
    Scenario sc = testutil::preset("table1-baseline");
    AgeGrid g = sc.grid();
    std::vector<double> p0 = sc.initial.build(g);
    CHECK(semigroup_defect(sc.rates, g, p0, 3.7, 2.4) == 0.0);
    CHECK(semigroup_defect(sc.rates, g, p0, 10.0, 0.0) == 0.0);
}

TEST_CASE("simulation inputs are validated") {
    Scenario sc = testutil::preset("table1-baseline");
    AgeGrid g = sc.grid();
    std::vector<double> p0 = sc.initial.build(g);
    CHECK_THROWS_AS(simulate(sc.rates, g, p0, -1.0), domain_error);
    CHECK_THROWS_AS(simulate(sc.rates, g, p0, 0.05), domain_error);  // not a step multiple
    std::vector<double> wrong(g.n - 1, 1.0);
    CHECK_THROWS_AS(simulate(sc.rates, g, wrong, 1.0), domain_error);
}

TEST_CASE("window totals of a run track direct quadrature") {
    Scenario sc = testutil::preset("table1-baseline");
    AgeGrid g = sc.grid();
    TrajectoryRecord rec = simulate(sc.rates, g, sc.initial.build(g), 40.0, 40.0);
    const std::vector<double>& p = rec.final_density;
    const TrajectoryRow& row = rec.rows.back();
    // windowed quadrature and masked quadrature differ only in end corrections
    CHECK(row.J == doctest::Approx(integrate(g, p, 0.0, 15.0)).epsilon(1e-3));
    CHECK(row.R == doctest::Approx(integrate(g, p, 15.0, 35.0)).epsilon(1e-3));
    CHECK(row.S == doctest::Approx(integrate(g, p, 35.0, 80.0)).epsilon(1e-3));
    CHECK(row.Q1 == doctest::Approx(weighted_total(g, sc.rates.omega1, p)).epsilon(1e-13));
}
