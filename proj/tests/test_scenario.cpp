#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <sstream>
#include <string>

#include "agestruct/quadrature.hpp"
#include "agestruct/scenario.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace agestruct;

namespace {

std::string preset_text(const std::string& name) {
    std::ifstream in(std::string(AGESTRUCT_SCENARIO_DIR) + "/" + name + ".json");
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("every built-in preset loads and carries its own name") {
    for (const std::string& name : preset_names()) {
        Scenario sc = testutil::preset(name);
        CHECK(sc.name == name);
        CHECK(sc.grid().n == 800);
    }
}

TEST_CASE("baseline scenario parameters are pinned") {
    Scenario sc = testutil::preset("table1-baseline");
    CHECK(sc.a1 == 80.0);
    CHECK(sc.a_min == 15.0);
    CHECK(sc.a_max == 35.0);
    CHECK(sc.horizon.da == 0.1);

    CHECK(sc.rates.beta_age.kind == AgeProfile::Kind::ramp_exp);
    CHECK(sc.rates.beta_age.p0 == 0.5);
    CHECK(sc.rates.beta_age.p1 == 15.0);
    CHECK(sc.rates.beta_age.p2 == 0.4);
    CHECK(sc.rates.beta_age.p3 == 35.0);

    CHECK(sc.rates.beta_mod.kind == ZMod::Kind::reciprocal);
    CHECK(sc.rates.beta_mod.p0 == 0.00022);

    CHECK(sc.rates.mu0.slope.kind == AgeProfile::Kind::quad_around);
    CHECK(sc.rates.mu0.slope.p0 == 1.76e-9);
    CHECK(sc.rates.mu0.slope.p1 == 20.0);

    CHECK(sc.rates.mu1.slope.kind == AgeProfile::Kind::ramp_down);
    CHECK(sc.rates.mu1.slope.p0 == 1e-6);
    CHECK(sc.rates.mu1.slope.p1 == 15.0);

    CHECK(sc.rates.mu2.is_zero());
    CHECK(sc.initial.kind == InitialProfile::Kind::uniform_total);
    CHECK(sc.initial.total == 392.0);
    CHECK(sc.horizon.t_end == 400.0);
}

TEST_CASE("oscillatory variant raises fertility and burden") {
    Scenario sc = testutil::preset("table1-oscillatory");
    CHECK(sc.rates.beta_age.p0 == 0.85);
    CHECK(sc.rates.mu1.slope.p0 == 2e-5);
    CHECK(sc.initial.kind == InitialProfile::Kind::piecewise_uniform);
    CHECK(sc.initial.juvenile == 8000.0);
    CHECK(sc.initial.reproductive == 3.0);
    CHECK(sc.initial.senescent == 12000.0);
    CHECK(sc.horizon.t_end == 1500.0);
}

TEST_CASE("canonical serialization round-trips byte for byte") {
    for (const std::string& name : preset_names()) {
        Scenario sc = testutil::preset(name);
        const std::string canon = canonical_text(sc);
        Scenario re = load_scenario_text(canon);
        CHECK(canonical_text(re) == canon);
        CHECK(scenario_hash(re) == scenario_hash(sc));
        CHECK(scenario_hash(sc).size() == 16);
    }
}

TEST_CASE("content hash distinguishes different parameters") {
    Scenario a = testutil::preset("table1-baseline");
    Scenario b = a;
    b.rates.beta_mod.p0 = 0.00023;
    CHECK(scenario_hash(a) != scenario_hash(b));
    // the name alone also participates in the canonical form
    Scenario c = a;
    c.name = "renamed";
    CHECK(scenario_hash(a) != scenario_hash(c));
}

TEST_CASE("structurally broken configurations are rejected as config errors") {
    CHECK_THROWS_AS(load_scenario_text("not json at all"), config_error);
    CHECK_THROWS_AS(load_scenario_text("{}"), config_error);
    CHECK_THROWS_AS(load_scenario_text(R"({"schema": "agestruct-scenario/999"})"), config_error);

    ordered_json j = ordered_json::parse(preset_text("table1-baseline"));
    j["fertility"]["age"]["kind"] = "no-such-profile";
    CHECK_THROWS_AS(load_scenario_text(j.dump()), config_error);

    ordered_json missing = ordered_json::parse(preset_text("table1-baseline"));
    missing["fertility"]["modulation"].erase("c");
    CHECK_THROWS_AS(load_scenario_text(missing.dump()), config_error);
}

TEST_CASE("domain validation rejects unusable values") {
    ordered_json j = ordered_json::parse(preset_text("table1-baseline"));
    j["horizon"]["t_end"] = -5.0;
    CHECK_THROWS_AS(load_scenario_text(j.dump()), domain_error);

    ordered_json inverted = ordered_json::parse(preset_text("table1-baseline"));
    inverted["grid"]["a_min"] = 40.0;  // above a_max
    CHECK_THROWS_AS(load_scenario_text(inverted.dump()), domain_error);
}

TEST_CASE("scenario grids honor the runtime cell-width override") {
    Scenario sc = testutil::preset("table1-baseline");
    CHECK(sc.grid().n == 800);
    CHECK(sc.grid(0.05).n == 1600);
    CHECK(sc.grid(0.05).da == 0.05);
}

TEST_CASE("initial profiles integrate to their declared masses") {
    Scenario sc = testutil::preset("table1-baseline");
    AgeGrid g = sc.grid();
    std::vector<double> p = sc.initial.build(g);
    CHECK(integrate(g, p) == doctest::Approx(392.0).epsilon(1e-12));

    Scenario osc = testutil::preset("table1-oscillatory");
    std::vector<double> q = osc.initial.build(g);
    CHECK(integrate(g, q, 0.0, 15.0) == doctest::Approx(8000.0).epsilon(1e-9));
    CHECK(integrate(g, q, 15.0, 35.0) == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(integrate(g, q, 35.0, 80.0) == doctest::Approx(12000.0).epsilon(1e-9));

    InitialProfile zero;
    for (double v : zero.build(g)) CHECK(v == 0.0);
}

TEST_CASE("scenario resolution prefers files and falls back to preset names") {
    CHECK_THROWS_AS(resolve_scenario("no-such-scenario", {AGESTRUCT_SCENARIO_DIR}),
                    config_error);
    Scenario by_path = resolve_scenario(
        std::string(AGESTRUCT_SCENARIO_DIR) + "/example-4-1.json", {});
    CHECK(by_path.name == "example-4-1");
    Scenario by_name = resolve_scenario("example-4-1", {AGESTRUCT_SCENARIO_DIR});
    CHECK(by_name.name == "example-4-1");
}
