#include <doctest.h>

#include "ppuc/error.hpp"
#include "ppuc/evaluation.hpp"
#include "ppuc/weights.hpp"
#include "support.hpp"

using namespace ppuc;
using testing::bus_sample;
using testing::data_path;
using testing::regimes;
using testing::rel_close;

namespace {

struct Toy {
  SystemModel system = load_system(data_path("toy_2gen_3h.json"));
  StudyContext ctx;
  Toy() {
    ctx.system = &system;
    ctx.forest.n_trees = 10;
    ctx.forest.seed = 11;
    ctx.uc.solver.mip_gap_tol = 1e-9;
  }
};

BenchmarkConfig all_methods(HyperParams w) {
  BenchmarkConfig cfg;
  cfg.wcsuc = w;
  cfg.ewcsuc = {w.max_depth, w.mtry, 1.0};
  return cfg;
}

bool dominated_by_iuc(const Benchmark& b) {
  const auto& iuc = b.at(Method::IUC).costs;
  for (const auto& r : b.results) {
    for (std::size_t i = 0; i < iuc.size(); ++i) {
      if (iuc[i] > r.costs[i] * (1.0 + 1e-6) + 1e-4) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("method names") {
  for (Method m : kAllMethods) CHECK(parse_method(to_string(m)) == m);
  CHECK(parse_method("w-csuc") == Method::WCSUC);
  CHECK_THROWS_AS((void)parse_method("oracle"), ParseError);
}

TEST_CASE("summary statistics") {
  MethodResult r;
  r.costs = {1.0, 2.0, 6.0};
  r.unserved = {0.0, 3.0, 0.0};
  CHECK(r.mean_cost() == doctest::Approx(3.0));
  CHECK(r.stddev_cost() == doctest::Approx(std::sqrt(7.0)));
  CHECK(r.mue() == doctest::Approx(1.0));
}

TEST_CASE("IUC costs its own deterministic solve and dominates every method") {
  Toy toy;
  const auto data = regimes(7, 10, 4);
  const auto bench = run_benchmark(data.train, data.validation, all_methods({2, MtryRule::Sqrt, 0.25}), toy.ctx);
  REQUIRE(bench.results.size() == 5);
  for (int i = 0; i < data.validation.size(); ++i) {
    const double direct =
        solve_deterministic(toy.system, data.validation.Y[static_cast<std::size_t>(i)], toy.ctx.uc).objective;
    CHECK(rel_close(bench.at(Method::IUC).costs[static_cast<std::size_t>(i)], direct, 1e-6));
  }
  CHECK(dominated_by_iuc(bench));
  for (const auto& r : bench.results) {
    for (double c : r.costs) CHECK(c >= 0.0);
  }
  CHECK(bench.at(Method::NSUC).scenarios.front() == 10);
  CHECK(bench.at(Method::PFUC).scenarios.front() == 1);
}

TEST_CASE("ew-CSUC equals w-CSUC with xi = D") {
  Toy toy;
  const auto data = regimes(8, 9, 3);
  const auto bench = run_benchmark(data.train, data.validation, all_methods({3, MtryRule::Frac06, 1.0}), toy.ctx);
  CHECK(bench.at(Method::WCSUC).costs == bench.at(Method::EWCSUC).costs);

  const RandomForest forest = fit_for(toy.ctx, {3, MtryRule::Frac06, 1.0}, data.train);
  for (int i = 0; i < data.validation.size(); ++i) {
    const Eigen::VectorXd raw = empirical_weights(forest, data.validation.X.row(i).transpose());
    CHECK(transform_weights(raw, 9, 9.0) == raw);
  }
}

TEST_CASE("uniform weights reproduce NSUC") {
  Toy toy;
  const auto data = regimes(9, 7, 1);
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(7, 1.0 / 7);
  const auto saa = prescribe(toy.ctx, data.train, uniform);
  const auto nsuc = solve_nsuc(toy.system, data.train.Y, toy.ctx.uc);
  CHECK(rel_close(saa.objective, nsuc.objective, 1e-6));
}

TEST_CASE("single scenario SAA matches the deterministic solve") {
  Toy toy;
  const auto data = regimes(10, 1, 1);
  const auto saa = prescribe(toy.ctx, data.train, Eigen::VectorXd::Ones(1));
  const auto det = solve_deterministic(toy.system, data.train.Y.front(), toy.ctx.uc);
  CHECK(rel_close(saa.objective, det.objective, 1e-6));
}

TEST_CASE("every method matches IUC when the scenarios are the realized day") {
  Toy toy;
  const std::vector<double> day{33.0, 71.0, 64.0};
  const Sample train = bus_sample({day, day, day, day}, Eigen::MatrixXd::Random(4, 2));
  const Sample test = bus_sample({day}, Eigen::MatrixXd::Random(1, 2));
  const auto bench = run_benchmark(train, test, all_methods({3, MtryRule::Sqrt, 4.0}), toy.ctx);
  const double iuc = bench.at(Method::IUC).costs.front();
  for (const auto& r : bench.results) CHECK(rel_close(r.costs.front(), iuc, 1e-6));
  CHECK(bench.at(Method::PFUC).unserved.front() == doctest::Approx(0.0));
}

TEST_CASE("no unserved energy when every method has room") {
  Toy toy;
  const Sample train = bus_sample({{40.0, 60.0, 55.0}, {45.0, 65.0, 50.0}, {42.0, 70.0, 61.0}}, Eigen::MatrixXd::Random(3, 2));
  const Sample test = bus_sample({{41.0, 66.0, 58.0}, {44.0, 62.0, 52.0}}, Eigen::MatrixXd::Random(2, 2));
  const auto bench = run_benchmark(train, test, all_methods({2, MtryRule::Sqrt, 1.0}), toy.ctx);
  for (const auto& r : bench.results) CHECK(r.mue() == doctest::Approx(0.0));
}

TEST_CASE("benchmark errors and method subsets") {
  Toy toy;
  const auto data = regimes(12, 4, 2);
  BenchmarkConfig only_iuc = all_methods({2, MtryRule::Sqrt, 1.0});
  only_iuc.methods = {Method::IUC};
  const auto bench = run_benchmark(data.train, data.validation, only_iuc, toy.ctx);
  CHECK(bench.results.size() == 1);
  CHECK(bench.at(Method::IUC).weight_seconds == 0.0);
  CHECK_THROWS_AS((void)bench.at(Method::NSUC), Error);
  CHECK_THROWS_AS((void)run_benchmark(data.train, head(data.validation, 0), only_iuc, toy.ctx), DataError);
  only_iuc.methods.clear();
  CHECK_THROWS_AS((void)run_benchmark(data.train, data.validation, only_iuc, toy.ctx), ValidationError);
}

TEST_CASE("training-size sweep") {
  Toy toy;
  const auto data = regimes(13, 8, 2);
  const Sample test = regimes(14, 1, 2).validation;
  const auto rows = sweep_training_size(data.train, data.validation, test, {2, MtryRule::Sqrt, 1.0}, {0.25, 1.0, 4.0},
                                        {1, 8}, {Method::WCSUC, Method::EWCSUC, Method::NSUC}, toy.ctx);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].D == 1);
  CHECK(rows[1].D == 8);
  // One training day: every scenario method solves the same single-scenario problem.
  const auto& one = rows[0].benchmark;
  CHECK(one.at(Method::WCSUC).costs == one.at(Method::EWCSUC).costs);
  for (std::size_t i = 0; i < one.days.size(); ++i) {
    CHECK(rel_close(one.at(Method::WCSUC).costs[i], one.at(Method::NSUC).costs[i], 1e-6));
  }
  CHECK_THROWS_AS((void)sweep_training_size(data.train, data.validation, test, {}, {1.0}, {9}, {Method::IUC}, toy.ctx),
                  DataError);
  CHECK_THROWS_AS((void)sweep_training_size(data.train, data.validation, test, {}, {1.0}, {}, {Method::IUC}, toy.ctx),
                  ValidationError);
}

TEST_CASE("covariate ablation") {
  Toy toy;
  const auto data = regimes(15, 8, 3);
  Dataset ds;
  ds.dates = data.train.dates;
  ds.dates.insert(ds.dates.end(), data.validation.dates.begin(), data.validation.dates.end());
  std::for_each(ds.dates.begin() + 8, ds.dates.end(), [](Date& d) { d += std::chrono::days{100}; });
  ds.X.resize(11, 2);
  ds.X << data.train.X, data.validation.X;
  ds.Y = data.train.Y;
  ds.Y.insert(ds.Y.end(), data.validation.Y.begin(), data.validation.Y.end());
  ds.covariate_names = {"regime", "noise"};
  ds.net_load_columns = {false, false};
  ds.calendar_columns = {false, false};
  ds.train = {0, 1, 2, 3, 4, 5, 6, 7};
  ds.test = {8, 9, 10};

  const HyperParams cfg{2, MtryRule::Sqrt, 1.0};
  const auto rows = ablate_covariates(ds, {{"all", {0, 1}}, {"again", {0, 1}}, {"single", {1}}}, cfg, 2, toy.ctx);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].mean_cost == rows[1].mean_cost);
  CHECK(rows[2].num_covariates == 1);
  for (const auto& r : rows) {
    CHECK(r.weight_seconds.size() == 2);
    CHECK(r.mean_weight_seconds() > 0.0);
  }
  CHECK_THROWS_AS((void)ablate_covariates(ds, {{"none", {}}}, cfg, 2, toy.ctx), ValidationError);
  CHECK_THROWS_AS((void)ablate_covariates(ds, {{"all", {0, 1}}}, cfg, 0, toy.ctx), ValidationError);

  CHECK(time_weight_evaluation(subset(ds, ds.train), subset(ds, ds.test), cfg, toy.ctx) > 0.0);
}
