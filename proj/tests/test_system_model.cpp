#include <doctest.h>

#include "ppuc/error.hpp"
#include "ppuc/system_model.hpp"
#include "support.hpp"

using namespace ppuc;

namespace {

nlohmann::json one_unit() {
  return nlohmann::json::parse(R"({
    "name": "one",
    "buses": [{"id": "a"}],
    "generators": [{
      "id": "g", "bus": "a", "p_min": 0.0, "p_max": 100.0, "ramp_up": 100.0, "ramp_down": 100.0,
      "min_up": 1, "min_down": 1, "no_load_cost": 0.0, "startup_cost": 0.0,
      "cost_segments": [{"mw": 60.0, "price": 10.0}, {"mw": 40.0, "price": 20.0}],
      "initial_on_hours": 0, "initial_off_hours": 1, "initial_power": 0.0
    }],
    "lines": [],
    "voll": 10000.0,
    "overgen_penalty": 1000.0
  })");
}

std::string validation_message(const nlohmann::json& doc) {
  try {
    (void)parse_system(doc);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("bundled IEEE 14-bus system") {
  const auto s = load_system(testing::data_path("ieee14_5gen.json"));
  CHECK(s.num_generators() == 5);
  CHECK(s.num_buses() == 14);
  CHECK(aggregate_capacity(s) == doctest::Approx(765.31).epsilon(1e-12));
  CHECK(s.voll == 10000.0);
  for (const auto& line : s.lines) CHECK(line.isf.size() == 14);
}

TEST_CASE("aggregate capacity") {
  const auto s = parse_system(one_unit());
  CHECK(aggregate_capacity(s) == 100.0);
  SystemModel empty;
  CHECK(aggregate_capacity(empty) == 0.0);
}

TEST_CASE("single bus without lines is valid") {
  const auto s = parse_system(one_unit());
  CHECK(s.num_lines() == 0);
  CHECK(s.horizon == 24);
}

TEST_CASE("generator on an unknown bus is rejected by name") {
  auto doc = one_unit();
  doc["generators"][0]["bus"] = "nowhere";
  const auto msg = validation_message(doc);
  CHECK(msg.find("generator g") != std::string::npos);
}

TEST_CASE("invariant violations") {
  SUBCASE("segment widths must cover p_max - p_min") {
    auto doc = one_unit();
    doc["generators"][0]["cost_segments"][1]["mw"] = 30.0;
    CHECK_FALSE(validation_message(doc).empty());
  }
  SUBCASE("nonconvex prices") {
    auto doc = one_unit();
    doc["generators"][0]["cost_segments"][1]["price"] = 5.0;
    CHECK_FALSE(validation_message(doc).empty());
  }
  SUBCASE("slack prices must dominate segment prices") {
    auto doc = one_unit();
    doc["overgen_penalty"] = 20.0;
    CHECK_FALSE(validation_message(doc).empty());
  }
  SUBCASE("exactly one initial status") {
    auto doc = one_unit();
    doc["generators"][0]["initial_on_hours"] = 3;
    CHECK_FALSE(validation_message(doc).empty());
  }
  SUBCASE("initial power of an off unit") {
    auto doc = one_unit();
    doc["generators"][0]["initial_power"] = 5.0;
    CHECK_FALSE(validation_message(doc).empty());
  }
  SUBCASE("duplicate bus ids") {
    auto doc = one_unit();
    doc["buses"].push_back({{"id", "a"}});
    CHECK_FALSE(validation_message(doc).empty());
  }
  SUBCASE("isf row length") {
    auto doc = one_unit();
    doc["lines"].push_back({{"id", "l"}, {"flow_limit", 10.0}, {"isf", {0.5, 0.5}}});
    CHECK(validation_message(doc).find("line l") != std::string::npos);
  }
  SUBCASE("no generators") {
    auto doc = one_unit();
    doc["generators"] = nlohmann::json::array();
    CHECK_FALSE(validation_message(doc).empty());
  }
}

TEST_CASE("malformed documents raise parse errors") {
  auto doc = one_unit();
  doc["generators"][0].erase("p_max");
  CHECK_THROWS_AS((void)parse_system(doc), ParseError);
  CHECK_THROWS_AS((void)load_system("/nonexistent/system.json"), Error);
}

TEST_CASE("json round trip") {
  const auto s = load_system(testing::data_path("ieee14_5gen.json"));
  const auto back = parse_system(to_json(s));
  CHECK(to_json(back) == to_json(s));
}
