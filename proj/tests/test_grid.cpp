#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "agestruct/grid.hpp"
#include "agestruct/quadrature.hpp"
#include "doctest.h"

using namespace agestruct;

TEST_CASE("grid cell counts and centers") {
    AgeGrid g(80.0, 0.1, 15.0, 35.0);
    CHECK(g.n == 800);
    CHECK(g.center(0) == doctest::Approx(0.05));
    CHECK(g.center(799) == doctest::Approx(79.95));
    CHECK(g.boundary(800) == doctest::Approx(80.0));

    AgeGrid tiny(1.0, 0.5, 0.0, 1.0);
    CHECK(tiny.n == 2);
    CHECK(tiny.center(1) == doctest::Approx(0.75));
}

TEST_CASE("grid construction rejects bad parameters") {
    CHECK_THROWS_AS(AgeGrid(80.0, 0.1, 35.0, 15.0), domain_error);  // inverted window
    CHECK_THROWS_AS(AgeGrid(80.0, 0.3, 15.0, 35.0), domain_error);  // da does not divide a1
    CHECK_THROWS_AS(AgeGrid(80.0, -0.1, 15.0, 35.0), domain_error);
    CHECK_THROWS_AS(AgeGrid(0.0, 0.1, 15.0, 35.0), domain_error);
    CHECK_THROWS_AS(AgeGrid(80.0, 0.1, -1.0, 35.0), domain_error);
    CHECK_THROWS_AS(AgeGrid(80.0, 0.1, 15.0, 90.0), domain_error);
}

TEST_CASE("boundary index round-trips aligned ages and rejects others") {
    AgeGrid g(80.0, 0.1, 15.0, 35.0);
    CHECK(g.boundary_index(0.0) == 0);
    CHECK(g.boundary_index(15.0) == 150);
    CHECK(g.boundary_index(80.0) == 800);
    CHECK(g.aligned(35.0));
    CHECK_FALSE(g.aligned(35.04));
    CHECK_THROWS_AS(g.boundary_index(0.05), domain_error);
    CHECK_THROWS_AS(g.boundary_index(-0.1), domain_error);
    CHECK_THROWS_AS(g.boundary_index(80.1), domain_error);
}

TEST_CASE("quadrature is high-order on smooth integrands") {
    AgeGrid g(80.0, 0.1, 15.0, 35.0);
    std::vector<double> v(g.n);
    for (std::size_t j = 0; j < g.n; ++j) v[j] = std::exp(-g.center(j));
    const double exact = 1.0 - std::exp(-80.0);
    // the one-sided endpoint-slope correction carries an O(da^3) boundary bias
    CHECK(integrate(g, v) == doctest::Approx(exact).epsilon(1e-5));

    // windowed integral of the same integrand
    const double exact_win = std::exp(-15.0) - std::exp(-35.0);
    CHECK(integrate(g, v, 15.0, 35.0) == doctest::Approx(exact_win).epsilon(1e-6));
}

TEST_CASE("quadrature is exact for affine integrands") {
    AgeGrid g(80.0, 0.1, 15.0, 35.0);
    std::vector<double> v(g.n);
    for (std::size_t j = 0; j < g.n; ++j) v[j] = 2.0 + 3.0 * g.center(j);
    // integral of 2 + 3a over [0, 80] = 160 + 1.5 * 6400
    CHECK(integrate(g, v) == doctest::Approx(160.0 + 9600.0).epsilon(1e-12));
    // constant over the fertile window
    std::vector<double> ones(g.n, 1.0);
    CHECK(integrate(g, ones, 15.0, 35.0) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("quadrature validates its window and sample size") {
    AgeGrid g(80.0, 0.1, 15.0, 35.0);
    std::vector<double> v(g.n, 1.0);
    CHECK_THROWS_AS(integrate(g, v, 35.0, 15.0), domain_error);
    CHECK_THROWS_AS(integrate(g, v, 0.05, 35.0), domain_error);
    std::vector<double> wrong(g.n - 1, 1.0);
    CHECK_THROWS_AS(integrate(g, wrong), domain_error);
}

TEST_CASE("cumulative boundary sums are plain prefix sums") {
    AgeGrid g(1.0, 0.25, 0.0, 1.0);
    std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    std::vector<double> c = cumulative_boundary(g, v);
    REQUIRE(c.size() == 5);
    CHECK(c[0] == 0.0);
    CHECK(c[1] == doctest::Approx(0.25));
    CHECK(c[2] == doctest::Approx(0.75));
    CHECK(c[4] == doctest::Approx(2.5));
}

TEST_CASE("monotone inverse recovers roots of monotone maps") {
    auto cube = [](double x) { return x * x * x; };
    CHECK(monotone_inverse(cube, 8.0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(monotone_inverse(cube, -8.0) == doctest::Approx(-2.0).epsilon(1e-10));
    auto dec = [](double x) { return -2.0 * x; };
    CHECK(monotone_inverse(dec, -10.0) == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(monotone_inverse(dec, 10.0) == doctest::Approx(-5.0).epsilon(1e-10));
    // far from the initial guess: bracket growth must find it
    CHECK(monotone_inverse(cube, 1.0e9, 1.0) == doctest::Approx(1000.0).epsilon(1e-10));
}

TEST_CASE("bisection finds bracketed roots and rejects unbracketed ones") {
    auto f = [](double x) { return x * x - 4.0; };
    CHECK(bisect_root(f, 0.0, 10.0, 1e-12) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK_THROWS_AS(bisect_root(f, 3.0, 10.0, 1e-12), domain_error);
    // endpoint roots are returned immediately
    CHECK(bisect_root(f, 2.0, 10.0, 1e-12) == 2.0);
}
