#include "support.hpp"

#include "gridmomentum/dynamics.hpp"
#include "gridmomentum/errors.hpp"

#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <fstream>

using namespace gridmomentum;
using Catch::Approx;

namespace {

nlohmann::json two_machine_json() {
    std::ifstream f(testsupport::data_path("two_machine.json"));
    return nlohmann::json::parse(f);
}

void expect_invalid(const nlohmann::json& j, const std::string& field) {
    try {
        load_case(j.dump());
        FAIL("accepted an invalid case");
    } catch (const ValidationError& e) {
        CHECK(e.field() == field);
    }
}

}  // namespace

TEST_CASE("momentum of single elements") {
    MachineParams g1;
    g1.H = 5.0;
    g1.S_B = 10000.0;
    CHECK(machine_momentum(g1) == Approx(100000.0));
    MachineParams g2;
    g2.H = 4.33;
    g2.S_B = 700.0;
    CHECK(machine_momentum(g2) == Approx(6062.0));
    g2.H = 0.0;
    CHECK(machine_momentum(g2) == 0.0);
    CigParams cig;
    cig.T_a = 10.0;
    cig.P_ref = 500.0;
    CHECK(cig_momentum(cig) == Approx(5000.0));
}

TEST_CASE("global momentum of the shipped cases") {
    CHECK(global_momentum_true(testsupport::two_machine()) == Approx(1300.0));
    CHECK(global_momentum_true(testsupport::two_machine_cig()) == Approx(1500.0));
    const auto& c = testsupport::ieee39();
    CHECK(c.machines.size() == 10);
    CHECK(c.cigs.size() == 3);
    CHECK(c.loads.size() == 19);
    CHECK(global_momentum_true(c) == Approx(171518.0).margin(0.5));
    CHECK(global_momentum_true(PowerSystemCase{}) == 0.0);
}

TEST_CASE("global momentum is additive") {
    auto c = testsupport::two_machine();
    const double before = global_momentum_true(c);
    MachineParams extra;
    extra.id = "G3";
    extra.bus = 2;
    extra.H = 3.2;
    extra.S_B = 250.0;
    c.machines.push_back(extra);
    CHECK(global_momentum_true(c) - before == Approx(2 * 3.2 * 250.0));
}

TEST_CASE("unit tags resolve onto the system base") {
    const auto& c = testsupport::two_machine();
    REQUIRE(c.lines.size() == 1);
    // 0.1 Ohm on a 100 kV, 100 MVA base is 0.001 pu
    CHECK(c.lines[0].r == Approx(0.001));
    CHECK(c.lines[0].x == Approx(0.001));
    CHECK(c.base_omega() == Approx(2 * 3.141592653589793 * 50));
    CHECK(testsupport::ieee39().base_omega() == Approx(2 * 3.141592653589793 * 60));
}

TEST_CASE("serialize round trip") {
    for (const auto* c : {&testsupport::two_machine(), &testsupport::two_machine_cig(), &testsupport::ieee39()}) {
        const auto again = load_case(serialize_case(*c));
        CHECK(again == *c);
        CHECK(serialize_case(again) == serialize_case(*c));
    }
}

TEST_CASE("validation rejects each violation class") {
    const auto base = two_machine_json();
    REQUIRE_NOTHROW(load_case(base.dump()));

    auto j = base;
    j["machines"][1]["bus"] = 7;
    expect_invalid(j, "bus");

    j = base;
    j["machines"][1]["id"] = "G1";
    expect_invalid(j, "id");

    j = base;
    j["machines"][0]["H"] = -1.0;
    expect_invalid(j, "H");

    j = base;
    j["machines"][0]["governor"]["R"] = 0.0;
    expect_invalid(j, "governor.R");

    j = base;
    j["machines"][0]["governor"]["T_g"] = 0.0;
    expect_invalid(j, "governor.T_g");

    j = base;
    j["slack"] = "nowhere";
    expect_invalid(j, "slack");

    j = base;
    j["lines"][0]["unit"] = "furlong";
    expect_invalid(j, "unit");

    j = base;
    j["lines"][0]["to"] = 1;
    expect_invalid(j, "to");

    j = base;
    j["loads"][0]["noise"] = {{"tau", 0.0}, {"sigma", 0.005}};
    expect_invalid(j, "noise.tau");

    CHECK_THROWS_AS(load_case("{ not json"), ValidationError);
    CHECK_THROWS_AS(load_case_file(testsupport::data_path("missing.json")), ValidationError);
}

TEST_CASE("CIG slip gain must be zero") {
    auto j = two_machine_json();
    j["buses"].push_back({{"id", 3}, {"name", "B3"}, {"base_kv", 100.0}});
    j["lines"].push_back({{"id", "L13"}, {"from", 1}, {"to", 3}, {"unit", "ohm"}, {"r", 0.1}, {"x", 0.2}});
    j["cigs"] = nlohmann::json::array(
        {{{"id", "C"}, {"bus", 3}, {"T_a", 10.0}, {"P_ref", 20.0}, {"P_g", 0.5}, {"K_w", 20.0}, {"K_d", 1.0}}});
    const auto c = load_case(j.dump());
    CHECK_THROWS_AS(DynamicModel(c, testsupport::equilibrium(c)), ValidationError);
    j["cigs"][0]["K_d"] = 0.0;
    const auto ok = load_case(j.dump());
    CHECK_NOTHROW(DynamicModel(ok, testsupport::equilibrium(ok)));
}

TEST_CASE("machines without governors are accepted") {
    auto j = two_machine_json();
    j["machines"][0].erase("governor");
    const auto c = load_case(j.dump());
    CHECK_FALSE(c.machines[0].governor.has_value());
    CHECK(c.machines[0].governor_gain_mw() == 0.0);
}
