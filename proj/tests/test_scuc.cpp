#include <doctest.h>

#include <random>

#include "ppuc/error.hpp"
#include "ppuc/scuc.hpp"
#include "support.hpp"

using namespace ppuc;
using testing::data_path;
using testing::flat_load;
using testing::rel_close;

namespace {

SystemModel toy() { return load_system(data_path("toy_2gen_3h.json")); }

Eigen::MatrixXd row(std::initializer_list<double> values) {
  Eigen::MatrixXd y(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index h = 0;
  for (double v : values) y(0, h++) = v;
  return y;
}

std::vector<Eigen::MatrixXd> toy_scenarios() {
  return {row({30.0, 80.0, 120.0}), row({50.0, 100.0, 90.0}), row({20.0, 60.0, 140.0})};
}

Eigen::MatrixXi all_on(const SystemModel& s) {
  return Eigen::MatrixXi::Ones(static_cast<Eigen::Index>(s.num_generators()), s.horizon);
}

/// Solves the first-stage block alone with every u fixed to `u`.
bool first_stage_admits(const SystemModel& s, const Eigen::MatrixXi& u) {
  milp::ModelBuilder m;
  const auto terms = build_first_stage(m, s);
  for (int g = 0; g < terms.generators; ++g) {
    for (int h = 0; h < terms.hours; ++h) {
      m.add_constraint(terms.on(g, h), milp::Sense::Equal, u(g, h), "fix_" + std::to_string(g) + "_" + std::to_string(h));
    }
  }
  const auto r = milp::solve(m);
  return r.status == milp::SolveStatus::Optimal;
}

SystemModel single_generator(const Generator& g, int horizon) {
  SystemModel s;
  s.name = "one";
  s.buses = {{"b"}};
  s.generators = {g};
  s.horizon = horizon;
  validate(s);
  return s;
}

Generator unit(int min_up, int min_down, int on_hours, int off_hours) {
  Generator g;
  g.id = "g";
  g.bus = "b";
  g.p_min = 10.0;
  g.p_max = 50.0;
  g.ramp_up = 40.0;
  g.ramp_down = 40.0;
  g.min_up = min_up;
  g.min_down = min_down;
  g.no_load_cost = 5.0;
  g.startup_cost = 20.0;
  g.cost_segments = {{40.0, 20.0}};
  g.initial_on_hours = on_hours;
  g.initial_off_hours = off_hours;
  g.initial_power = on_hours > 0 ? g.p_min : 0.0;
  return g;
}

}  // namespace

TEST_CASE("second-stage arithmetic on one unit") {
  const auto warm = load_system(data_path("single_unit_warm.json"));
  const auto cold = load_system(data_path("single_unit_cold.json"));
  const auto on = CommitmentSchedule::from_status(warm, all_on(warm));
  const auto off = CommitmentSchedule::all_off(cold);

  SUBCASE("load within capacity") {
    const auto d = solve_second_stage(warm, on, flat_load(warm, 50.0));
    CHECK(rel_close(d.cost, 24000.0, 1e-6));
    CHECK(d.p.maxCoeff() == doctest::Approx(50.0));
    CHECK(d.unserved_energy() == doctest::Approx(0.0));
  }
  SUBCASE("load above capacity") {
    const auto d = solve_second_stage(warm, on, flat_load(warm, 150.0));
    CHECK(rel_close(d.cost, 24.0 * 502000.0, 1e-6));
    CHECK(d.curtail.minCoeff() == doctest::Approx(50.0));
  }
  SUBCASE("uncommitted unit") {
    CHECK(rel_close(second_stage_value(cold, off, flat_load(cold, 50.0)), 24.0 * 500000.0, 1e-6));
  }
  SUBCASE("nothing on, nothing to serve") {
    CHECK(second_stage_value(cold, off, flat_load(cold, 0.0)) == doctest::Approx(0.0));
  }
  SUBCASE("negative net load is absorbed by the overgeneration slack") {
    const auto d = solve_second_stage(cold, off, flat_load(cold, -5.0));
    CHECK(rel_close(d.cost, 24.0 * 5.0 * cold.overgen_penalty, 1e-6));
  }
}

TEST_CASE("first-stage cost matches the run-length oracle") {
  const auto s = toy();
  for (const auto& u : testing::feasible_statuses(s)) {
    const auto z = CommitmentSchedule::from_status(s, u);
    CHECK(first_stage_cost(s, z) == doctest::Approx(testing::commitment_cost(s, u)));
    CHECK(((z.v + z.w).array() <= 1).all());
  }
}

TEST_CASE("min-up of 24 hours holds a started unit on all day") {
  const auto s = single_generator(unit(24, 1, 0, 1), 24);
  milp::ModelBuilder m;
  const auto terms = build_first_stage(m, s);
  m.add_constraint(terms.startup(0, 0), milp::Sense::Equal, 1.0, "start");
  milp::LinearExpr total;
  for (int h = 0; h < 24; ++h) total += terms.on(0, h);
  m.add_objective(total);
  const auto r = milp::solve(m);
  REQUIRE(r.status == milp::SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(24.0));
}

TEST_CASE("min-down window blocks early restarts") {
  const auto s = single_generator(unit(1, 4, 0, 2), 6);
  for (int h = 0; h < 6; ++h) {
    milp::ModelBuilder m;
    const auto terms = build_first_stage(m, s);
    m.add_objective(terms.on(0, h), -1.0);
    const auto r = milp::solve(m);
    REQUIRE(r.status == milp::SolveStatus::Optimal);
    // Hours 1 and 2 (0-based 0, 1) are still inside the down window.
    CHECK(-r.objective == doctest::Approx(h < 2 ? 0.0 : 1.0));
  }
}

TEST_CASE("unit min times admit every pattern") {
  const auto s = single_generator(unit(1, 1, 1, 0), 5);
  for (int mask = 0; mask < 32; ++mask) {
    Eigen::MatrixXi u(1, 5);
    for (int h = 0; h < 5; ++h) u(0, h) = (mask >> h) & 1;
    CHECK(first_stage_admits(s, u));
  }
}

TEST_CASE("first-stage feasible set equals the run-length oracle on random units") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> hours(1, 4);
  std::uniform_int_distribution<int> history(1, 5);
  for (int trial = 0; trial < 30; ++trial) {
    const bool on = rng() % 2 == 0;
    const auto g = unit(hours(rng), hours(rng), on ? history(rng) : 0, on ? 0 : history(rng));
    const auto s = single_generator(g, 6);
    for (int mask = 0; mask < 64; ++mask) {
      Eigen::MatrixXi u(1, 6);
      std::vector<int> seq(6);
      for (int h = 0; h < 6; ++h) seq[h] = u(0, h) = (mask >> h) & 1;
      CHECK_MESSAGE(first_stage_admits(s, u) == testing::status_feasible(g, seq),
                    "min_up=" << g.min_up << " min_down=" << g.min_down << " on=" << g.initial_on_hours
                              << " off=" << g.initial_off_hours << " mask=" << mask);
    }
  }
}

TEST_CASE("second-stage LP equals a 1 MW dispatch grid") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> load(0, 90);
  for (int trial = 0; trial < 10; ++trial) {
    SystemModel s;
    s.name = "grid";
    s.buses = {{"b"}};
    s.horizon = 4;
    Generator a = unit(1, 1, 2, 0);
    a.id = "a";
    a.p_max = 40.0;
    a.ramp_up = a.ramp_down = 15.0;
    a.cost_segments = {{15.0, 12.0}, {15.0, 25.0}};
    Generator b = unit(1, 1, 0, 2);
    b.id = "b";
    b.p_min = 5.0;
    b.p_max = 30.0;
    b.ramp_up = b.ramp_down = 30.0;
    b.cost_segments = {{25.0, 40.0}};
    s.generators = {a, b};
    validate(s);

    const auto statuses = testing::feasible_statuses(s);
    const auto& u = statuses[rng() % statuses.size()];
    Eigen::MatrixXd y(1, 4);
    for (int h = 0; h < 4; ++h) y(0, h) = load(rng);
    const auto z = CommitmentSchedule::from_status(s, u);
    double lp = 0.0;
    try {
      lp = second_stage_value(s, z, y);
    } catch (const SolverError&) {
      CHECK(testing::grid_second_stage(s, u, y) == std::numeric_limits<double>::infinity());
      continue;
    }
    const double grid = testing::grid_second_stage(s, u, y);
    const double tol = 1.0 * 40.0 * s.horizon;  // resolution x top price x hours
    CHECK(lp <= grid + 1e-6);
    CHECK(grid - lp <= tol);
  }
}

TEST_CASE("toy SAA, NSUC and deterministic solves match commitment enumeration") {
  const auto s = toy();
  const auto scenarios = toy_scenarios();

  SUBCASE("weighted SAA") {
    const std::vector<double> w{0.2, 0.5, 0.3};
    const auto oracle = testing::enumerate_optimum(s, scenarios, w);
    const auto sol = solve_weighted_saa(s, scenarios, Eigen::Map<const Eigen::VectorXd>(w.data(), 3));
    CHECK(rel_close(sol.objective, oracle.objective, 1e-6));
  }
  SUBCASE("NSUC") {
    const std::vector<double> w(3, 1.0 / 3.0);
    const auto oracle = testing::enumerate_optimum(s, scenarios, w);
    CHECK(rel_close(solve_nsuc(s, scenarios).objective, oracle.objective, 1e-6));
  }
  SUBCASE("deterministic") {
    for (const auto& y : scenarios) {
      const auto oracle = testing::enumerate_optimum(s, {y}, {1.0});
      CHECK(rel_close(solve_deterministic(s, y).objective, oracle.objective, 1e-6));
    }
  }
}

TEST_CASE("SAA objective decomposes into first stage plus weighted recourse") {
  const auto s = toy();
  const auto scenarios = toy_scenarios();
  Eigen::VectorXd w(3);
  w << 0.6, 0.1, 0.3;
  const auto sol = solve_weighted_saa(s, scenarios, w);
  double recomputed = first_stage_cost(s, sol.schedule);
  CHECK(sol.first_stage_cost == doctest::Approx(recomputed));
  for (int k = 0; k < 3; ++k) recomputed += w[k] * second_stage_value(s, sol.schedule, scenarios[k]);
  CHECK(rel_close(sol.objective, recomputed, 1e-6));
  REQUIRE(sol.dispatch.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(rel_close(sol.dispatch[k].cost, second_stage_value(s, sol.schedule, scenarios[k]), 1e-6, 1e-6));
  }
}

TEST_CASE("degenerate SAA instances") {
  const auto s = toy();
  const auto y = toy_scenarios()[0];
  const auto det = solve_deterministic(s, y);

  const std::vector<Eigen::MatrixXd> one{y};
  CHECK(rel_close(solve_weighted_saa(s, one, Eigen::VectorXd::Ones(1)).objective, det.objective, 1e-9));
  CHECK(rel_close(solve_nsuc(s, one).objective, det.objective, 1e-9));

  const std::vector<Eigen::MatrixXd> twice{y, y};
  CHECK(rel_close(solve_weighted_saa(s, twice, Eigen::VectorXd::Constant(2, 0.5)).objective, det.objective, 1e-6));

  const auto scen = toy_scenarios();
  CHECK(solve_nsuc(s, scen).objective ==
        solve_weighted_saa(s, scen, Eigen::VectorXd::Constant(3, 1.0 / 3.0)).objective);

  CHECK_THROWS_AS((void)solve_weighted_saa(s, std::vector<Eigen::MatrixXd>{}, Eigen::VectorXd()), Error);
  CHECK_THROWS_AS((void)solve_weighted_saa(s, scen, Eigen::VectorXd::Ones(2)), Error);
}

TEST_CASE("zero load with cold units commits nothing") {
  const auto s = load_system(data_path("single_unit_cold.json"));
  const auto sol = solve_deterministic(s, flat_load(s, 0.0));
  CHECK(sol.schedule.u.sum() == 0);
  CHECK(sol.objective == doctest::Approx(0.0));
}

TEST_CASE("cheap startup commits a cold unit for the whole day") {
  const auto s = load_system(data_path("single_unit_cold.json"));
  Eigen::MatrixXd y = flat_load(s, 50.0);
  y(0, 0) = 10.0;  // a cold start reaches p_min in its first hour
  const auto sol = solve_deterministic(s, y);
  CHECK(sol.schedule.u.sum() == 24);
  const double expected = 50.0 + 30.0 * 24 + 20.0 * (10.0 + 23 * 50.0);
  CHECK(rel_close(sol.objective, expected, 1e-6));
}

TEST_CASE("perfect foresight lower-bounds every feasible commitment") {
  const auto s = toy();
  const auto statuses = testing::feasible_statuses(s);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> load(0.0, 150.0);
  for (int trial = 0; trial < 15; ++trial) {
    const auto y = row({load(rng), load(rng), load(rng)});
    const auto iuc = solve_deterministic(s, y);
    const double best = first_stage_cost(s, iuc.schedule) + second_stage_value(s, iuc.schedule, y);
    for (const auto& u : statuses) {
      const auto z = CommitmentSchedule::from_status(s, u);
      double other = 0.0;
      try {
        other = first_stage_cost(s, z) + second_stage_value(s, z, y);
      } catch (const SolverError&) {
        continue;
      }
      CHECK(best <= other + 1e-6 * std::abs(other) + 1e-6);
    }
  }
}

TEST_CASE("scaling weights keeps the ranking of commitments") {
  const auto s = toy();
  const auto scenarios = toy_scenarios();
  const std::vector<double> w{0.2, 0.5, 0.3};
  const auto statuses = testing::feasible_statuses(s);
  std::vector<double> base;
  std::vector<double> scaled;
  for (const auto& u : statuses) {
    const auto z = CommitmentSchedule::from_status(s, u);
    double a = 0.0;
    try {
      for (int k = 0; k < 3; ++k) a += w[k] * (first_stage_cost(s, z) + second_stage_value(s, z, scenarios[k]));
    } catch (const SolverError&) {
      continue;
    }
    base.push_back(a);
    scaled.push_back(7.5 * a);
  }
  for (std::size_t i = 0; i < base.size(); ++i) {
    for (std::size_t j = 0; j < base.size(); ++j) CHECK((base[i] < base[j]) == (scaled[i] < scaled[j]));
  }
  const auto best = std::min_element(base.begin(), base.end());
  const auto sol = solve_weighted_saa(s, scenarios, Eigen::Map<const Eigen::VectorXd>(w.data(), 3));
  CHECK(rel_close(sol.objective, *best, 1e-6));
}

TEST_CASE("no curtailment when committed capacity can follow the load") {
  const auto s = toy();
  const auto z = CommitmentSchedule::from_status(s, all_on(s));
  const auto d = solve_second_stage(s, z, row({60.0, 120.0, 140.0}));
  CHECK(d.unserved_energy() == doctest::Approx(0.0));

  const auto grid = load_system(data_path("ieee14_5gen.json"));
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.num_buses()), grid.horizon);
  // First hour matches the initial output; cold units only reach p_min then.
  for (Eigen::Index b = 1; b < y.rows(); ++b) {
    y.row(b).setConstant(0.4 * aggregate_capacity(grid) / (y.rows() - 1));
    y(b, 0) = 140.0 / (y.rows() - 1);
  }
  const auto sol = solve_deterministic(grid, y);
  REQUIRE(sol.dispatch.size() == 1);
  const auto& dispatch = sol.dispatch.front();
  CHECK(dispatch.unserved_energy() == doctest::Approx(0.0).epsilon(1e-6));
  for (std::size_t l = 0; l < grid.num_lines(); ++l) {
    for (int h = 0; h < grid.horizon; ++h) {
      CHECK(std::abs(dispatch.line_flow(static_cast<Eigen::Index>(l), h)) <= grid.lines[l].flow_limit + 1e-6);
    }
  }
}

TEST_CASE("line flows are shift factors times net injections") {
  const auto grid = load_system(data_path("ieee14_5gen.json"));
  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(grid.num_buses()), grid.horizon, 30.0);
  const auto sol = solve_deterministic(grid, y);
  const auto& d = sol.dispatch.front();
  const auto gen_bus = grid.generator_buses();
  for (int h = 0; h < grid.horizon; ++h) {
    Eigen::VectorXd injection = d.curtail.col(h) - d.overgen.col(h) - y.col(h);
    for (std::size_t g = 0; g < gen_bus.size(); ++g) {
      injection[static_cast<Eigen::Index>(gen_bus[g])] += d.p(static_cast<Eigen::Index>(g), h);
    }
    for (std::size_t l = 0; l < grid.num_lines(); ++l) {
      CHECK(d.line_flow(static_cast<Eigen::Index>(l), h) ==
            doctest::Approx(grid.lines[l].isf.dot(injection)).epsilon(1e-6));
    }
  }
}

TEST_CASE("sparsified SAA stays within the dropped-mass bound") {
  const auto s = toy();
  const auto scenarios = toy_scenarios();
  Eigen::VectorXd w(3);
  w << 1.0 - 2e-10, 1e-10, 1e-10;
  UcOptions sparse;
  sparse.solver.mip_gap_tol = 1e-9;
  UcOptions dense = sparse;
  dense.sparsify_eps = 0.0;
  const auto a = solve_weighted_saa(s, scenarios, w, sparse);
  const auto b = solve_weighted_saa(s, scenarios, w, dense);
  CHECK(a.scenario_ids.size() == 1);
  CHECK(b.scenario_ids.size() == 3);
  double c_ub = 0.0;
  for (const auto& y : scenarios) c_ub = std::max(c_ub, s.voll * y.sum());
  CHECK(std::abs(a.objective - b.objective) <= 1e-9 * 3 * c_ub + 2e-9 * std::abs(b.objective) + 1e-6);
}

TEST_CASE("solutions serialize") {
  const auto s = toy();
  const auto sol = solve_deterministic(s, toy_scenarios()[1]);
  const auto doc = to_json(sol);
  CHECK(doc.contains("schedule"));
  CHECK(doc.at("scenarios").size() == 1);
  CHECK(doc.at("objective").get<double>() == doctest::Approx(sol.objective));
}

TEST_CASE("lazy line limits reach the optimum of the full model") {
  const auto grid = load_system(data_path("ieee14_5gen.json"));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> level(0.3, 0.85);
  std::vector<Eigen::MatrixXd> scenarios;
  for (int k = 0; k < 3; ++k) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.num_buses()), grid.horizon);
    for (int h = 0; h < grid.horizon; ++h) {
      const double total = level(rng) * aggregate_capacity(grid);
      for (Eigen::Index b = 1; b < y.rows(); ++b) y(b, h) = total * (b % 3 + 1) / (2.0 * (y.rows() - 1));
    }
    scenarios.push_back(y);
  }
  Eigen::VectorXd w(3);
  w << 0.5, 0.3, 0.2;

  milp::ModelBuilder full;
  const auto terms = build_first_stage(full, grid);
  full.add_objective(terms.cost);
  for (int k = 0; k < 3; ++k) {
    const auto block = build_second_stage(full, grid, terms, scenarios[k], "s" + std::to_string(k) + "_");
    full.add_objective(block.cost, w[k]);
  }
  const auto reference = milp::solve(full);
  REQUIRE(reference.status == milp::SolveStatus::Optimal);

  const auto lazy = solve_weighted_saa(grid, scenarios, w);
  CHECK(rel_close(lazy.objective, reference.objective, 2e-6));
  for (const auto& d : lazy.dispatch) {
    for (std::size_t l = 0; l < grid.num_lines(); ++l) {
      CHECK(d.line_flow.row(static_cast<Eigen::Index>(l)).cwiseAbs().maxCoeff() <= grid.lines[l].flow_limit + 1e-6);
    }
  }
}
