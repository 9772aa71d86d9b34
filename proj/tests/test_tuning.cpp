#include <doctest.h>

#include <random>

#include "ppuc/error.hpp"
#include "ppuc/tuning.hpp"
#include "ppuc/weights.hpp"
#include "support.hpp"

using namespace ppuc;
using testing::bus_sample;
using testing::data_path;
using testing::rel_close;
using testing::regimes;

namespace {

struct Toy {
  SystemModel system = load_system(data_path("toy_2gen_3h.json"));
  StudyContext ctx;
  Toy() {
    ctx.system = &system;
    ctx.forest.n_trees = 10;
    ctx.forest.seed = 3;
    ctx.uc.solver.mip_gap_tol = 1e-9;
  }
};

}  // namespace

TEST_CASE("grid sizes and order") {
  CHECK(make_grid(GridSpec{}).size() == 45);
  GridSpec one{{6}, {MtryRule::Sqrt}, {1.0}};
  CHECK(make_grid(one).size() == 1);
  GridSpec identity;
  identity.xi_factors = {1.0};
  CHECK(make_grid(identity).size() == 9);

  const auto g = make_grid(GridSpec{});
  CHECK(g.front() == HyperParams{3, MtryRule::Sqrt, 0.1});
  CHECK(g[1] == HyperParams{3, MtryRule::Sqrt, 0.25});
  CHECK(g[5] == HyperParams{3, MtryRule::Frac03, 0.1});
  CHECK(g.back() == HyperParams{10, MtryRule::Frac06, 10.0});

  GridSpec empty;
  empty.depths.clear();
  CHECK_THROWS_AS((void)make_grid(empty), ValidationError);
  GridSpec bad;
  bad.xi_factors = {0.0};
  CHECK_THROWS_AS((void)make_grid(bad), ValidationError);
}

TEST_CASE("tie-break order") {
  auto result = [](int depth, int mtry, MtryRule rule, double xi, double cost) {
    ConfigResult r;
    r.config = {depth, rule, xi};
    r.mtry = mtry;
    r.total_cost = cost;
    return r;
  };
  CHECK(ranks_before(result(10, 9, MtryRule::Frac06, 10.0, 1.0), result(3, 1, MtryRule::Sqrt, 1.0, 2.0)));
  CHECK(ranks_before(result(3, 9, MtryRule::Frac06, 10.0, 5.0), result(6, 1, MtryRule::Sqrt, 1.0, 5.0)));
  CHECK(ranks_before(result(6, 2, MtryRule::Frac06, 10.0, 5.0), result(6, 3, MtryRule::Sqrt, 1.0, 5.0)));
  CHECK(ranks_before(result(6, 2, MtryRule::Sqrt, 10.0, 5.0), result(6, 2, MtryRule::Frac03, 1.0, 5.0)));
  CHECK(ranks_before(result(6, 2, MtryRule::Sqrt, 4.0, 5.0), result(6, 2, MtryRule::Sqrt, 0.1, 5.0)));
  CHECK(ranks_before(result(6, 2, MtryRule::Sqrt, 0.25, 5.0), result(6, 2, MtryRule::Sqrt, 4.0, 5.0)));
  CHECK_FALSE(ranks_before(result(6, 2, MtryRule::Sqrt, 1.0, 5.0), result(6, 2, MtryRule::Sqrt, 1.0, 5.0)));
}

TEST_CASE("exact ties pick depth 3") {
  Toy toy;
  // Identical training days make every configuration prescribe the same schedule.
  const std::vector<std::vector<double>> same(5, {40.0, 90.0, 70.0});
  const Sample train = bus_sample(same, Eigen::MatrixXd::Random(5, 2));
  const Sample val = bus_sample({{35.0, 95.0, 60.0}}, Eigen::MatrixXd::Random(1, 2));
  GridSpec spec;
  spec.depths = {10, 6, 3};
  spec.xi_factors = {0.25, 1.0, 4.0};
  const auto result = tune(train, val, make_grid(spec), toy.ctx);
  for (const auto& c : result.configs) CHECK(c.total_cost == result.configs.front().total_cost);
  CHECK(result.best_config().config == HyperParams{3, MtryRule::Sqrt, 1.0});
}

TEST_CASE("single-configuration grid") {
  Toy toy;
  const auto data = regimes(1, 6, 2);
  const HyperParams cfg{2, MtryRule::Frac06, 4.0};
  const auto result = tune(data.train, data.validation, {cfg}, toy.ctx);
  REQUIRE(result.configs.size() == 1);
  CHECK(result.best == 0);
  CHECK(result.best_identity == -1);
  CHECK(result.best_config().config == cfg);
  CHECK(result.best_config().day_costs.size() == 2);
}

TEST_CASE("validation totals match an enumeration oracle") {
  Toy toy;
  const auto data = regimes(2, 3, 2);
  for (const HyperParams cfg : {HyperParams{0, MtryRule::Sqrt, 1.0}, HyperParams{2, MtryRule::Frac06, 0.25}}) {
    const auto got = evaluate_config(cfg, data.train, data.validation, toy.ctx);
    const RandomForest forest = fit_for(toy.ctx, cfg, data.train);
    double total = 0.0;
    for (int i = 0; i < data.validation.size(); ++i) {
      const Eigen::VectorXd w = transform_weights(empirical_weights(forest, data.validation.X.row(i).transpose()), 3,
                                                  cfg.xi(3));
      const auto best = testing::enumerate_optimum(toy.system, data.train.Y, {w[0], w[1], w[2]});
      const auto z = CommitmentSchedule::from_status(toy.system, best.u);
      total += testing::commitment_cost(toy.system, best.u) +
               second_stage_value(toy.system, z, data.validation.Y[static_cast<std::size_t>(i)]);
    }
    CHECK(rel_close(got.total_cost, total, 1e-6));
  }
}

TEST_CASE("xi = D scores like the untransformed weights") {
  Toy toy;
  const auto data = regimes(3, 8, 3);
  const HyperParams cfg{3, MtryRule::Sqrt, 1.0};
  const auto got = evaluate_config(cfg, data.train, data.validation, toy.ctx);
  const RandomForest forest = fit_for(toy.ctx, cfg, data.train);
  double total = 0.0;
  for (int i = 0; i < data.validation.size(); ++i) {
    const auto sol = prescribe(toy.ctx, data.train, empirical_weights(forest, data.validation.X.row(i).transpose()));
    total += realized_outcome(toy.system, sol.schedule, data.validation.Y[static_cast<std::size_t>(i)],
                              toy.ctx.uc.solver)
                 .cost;
  }
  CHECK(rel_close(got.total_cost, total, 1e-6));
}

TEST_CASE("tuning is deterministic and the best total is minimal") {
  Toy toy;
  const auto data = regimes(4, 10, 4);
  GridSpec spec;
  spec.depths = {1, 3};
  spec.mtry = {MtryRule::Sqrt, MtryRule::Frac06};
  spec.xi_factors = {0.1, 1.0, 10.0};
  const auto grid = make_grid(spec);
  const auto a = tune(data.train, data.validation, grid, toy.ctx);
  const auto b = tune(data.train, data.validation, grid, toy.ctx);
  for (std::size_t c = 0; c < grid.size(); ++c) {
    CHECK(a.configs[c].total_cost == b.configs[c].total_cost);
    CHECK(a.best_config().total_cost <= a.configs[c].total_cost);
  }
  CHECK(a.best == b.best);
  REQUIRE(a.best_identity >= 0);
  CHECK(a.configs[static_cast<std::size_t>(a.best_identity)].config.xi_factor == 1.0);
}

TEST_CASE("an informative forest beats a depth-0 forest") {
  Toy toy;
  const auto data = regimes(5, 12, 4);
  const auto result = tune(data.train, data.validation,
                           {HyperParams{0, MtryRule::Sqrt, 1.0}, HyperParams{3, MtryRule::Sqrt, 1.0}}, toy.ctx);
  CHECK(result.configs[1].total_cost < result.configs[0].total_cost);
  CHECK(result.best == 1);
}

TEST_CASE("tuning input errors") {
  Toy toy;
  const auto data = regimes(6, 4, 1);
  CHECK_THROWS_AS((void)tune(data.train, data.validation, {}, toy.ctx), ValidationError);
  CHECK_THROWS_AS((void)tune(data.train, head(data.validation, 0), {HyperParams{}}, toy.ctx), DataError);
  StudyContext none;
  CHECK_THROWS_AS((void)tune(data.train, data.validation, {HyperParams{}}, none), ValidationError);
}

TEST_CASE("hyperparameter json round trip") {
  const HyperParams cfg{10, MtryRule::Frac03, 0.25};
  CHECK(hyperparams_from_json(nlohmann::json::parse(to_json(cfg).dump())) == cfg);
}
