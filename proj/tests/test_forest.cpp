#include <doctest.h>

#include <numeric>
#include <random>

#include "ppuc/error.hpp"
#include "ppuc/forest.hpp"

using namespace ppuc;

namespace {

struct Data {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
};

Data noisy_data(int D, int d, int outputs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Data out{Eigen::MatrixXd(D, d), Eigen::MatrixXd(D, outputs)};
  for (int i = 0; i < D; ++i) {
    for (int j = 0; j < d; ++j) out.X(i, j) = n01(rng);
    for (int k = 0; k < outputs; ++k) out.Y(i, k) = out.X(i, k % d) * (k + 1) + 0.3 * n01(rng);
  }
  return out;
}

double training_mse(const RandomForest& f, const Data& data) {
  double sse = 0.0;
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    sse += (predict(f, data.X.row(i).transpose()) - data.Y.row(i).transpose()).squaredNorm();
  }
  return sse / static_cast<double>(data.X.rows() * data.Y.cols());
}

ForestParams params(int trees, int depth, int mtry, std::uint64_t seed = 1) {
  ForestParams p;
  p.n_trees = trees;
  p.max_depth = depth;
  p.mtry = mtry;
  p.seed = seed;
  return p;
}

/// Root splits feature 0 at 0.5; leaf 0 on the left, leaf 1 on the right.
RegressionTree stump(std::vector<int> left, std::vector<int> right, double left_mean, double right_mean) {
  std::vector<TreeNode> nodes(3);
  nodes[0].feature = 0;
  nodes[0].threshold = 0.5;
  nodes[0].left = 1;
  nodes[0].right = 2;
  nodes[1].leaf = 0;
  nodes[2].leaf = 1;
  std::vector<TreeLeaf> leaves(2);
  leaves[0].members = std::move(left);
  leaves[0].mean = Eigen::VectorXd::Constant(1, left_mean);
  leaves[1].members = std::move(right);
  leaves[1].mean = Eigen::VectorXd::Constant(1, right_mean);
  return {nodes, leaves};
}

}  // namespace

TEST_CASE("depth-0 tree is one leaf holding every training day") {
  const auto data = noisy_data(17, 3, 2, 5);
  auto p = params(1, 0, 3);
  p.bootstrap = false;
  const auto f = fit_forest(data.X, data.Y, p);
  REQUIRE(f.trees.size() == 1);
  CHECK(f.trees[0].leaves().size() == 1);
  std::vector<int> all(17);
  std::iota(all.begin(), all.end(), 0);
  CHECK(f.trees[0].leaves()[0].members == all);
  const Eigen::VectorXd mean = data.Y.colwise().mean().transpose();
  CHECK((predict(f, data.X.row(3).transpose()) - mean).norm() < 1e-12);
}

TEST_CASE("fitting is deterministic and independent of thread count") {
  const auto data = noisy_data(60, 6, 4, 9);
  const auto p = params(12, 5, 2, 77);
  const auto a = fit_forest(data.X, data.Y, p, 1);
  const auto b = fit_forest(data.X, data.Y, p, 1);
  const auto c = fit_forest(data.X, data.Y, p, 4);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(to_json(a).dump() == to_json(c).dump());
  const auto other = fit_forest(data.X, data.Y, params(12, 5, 2, 78));
  CHECK(to_json(a).dump() != to_json(other).dump());
}

TEST_CASE("deep tree fits a one-dimensional identity below the label variance") {
  Eigen::MatrixXd X(100, 1);
  for (int i = 0; i < 100; ++i) X(i, 0) = std::sin(0.37 * i) * 10.0;
  const Eigen::MatrixXd Y = X;
  const auto f = fit_forest(X, Y, params(1, 10, 1));
  const double variance = (Y.array() - Y.mean()).square().mean();
  CHECK(training_mse(f, {X, Y}) < variance);
}

TEST_CASE("singleton leaves reproduce their day") {
  const auto data = noisy_data(25, 4, 3, 21);
  auto p = params(5, 30, 4);
  p.bootstrap = false;
  const auto f = fit_forest(data.X, data.Y, p);
  for (int k = 0; k < 25; ++k) {
    CHECK((predict(f, data.X.row(k).transpose()) - data.Y.row(k).transpose()).norm() < 1e-9);
  }
}

TEST_CASE("prediction averages the trees' leaf means") {
  RandomForest f;
  f.num_train = 4;
  f.num_features = 1;
  f.num_outputs = 1;
  f.params.n_trees = 2;
  f.trees = {stump({0, 1}, {2, 3}, 3.0, 8.0), stump({0, 1, 2}, {3}, -1.0, 5.0)};
  Eigen::VectorXd x(1);
  x << 0.7;
  CHECK(predict(f, x)[0] == doctest::Approx((8.0 + 5.0) / 2));
  x << 0.2;
  CHECK(predict(f, x)[0] == doctest::Approx((3.0 - 1.0) / 2));
}

TEST_CASE("traversal") {
  const auto tree = stump({0}, {1, 2}, 0.0, 1.0);
  Eigen::VectorXd x(1);
  x << 0.7;
  CHECK(tree.leaf_of(x) == 1);
  x << 0.5;
  CHECK(tree.leaf_of(x) == 0);
  x << -1e300;
  CHECK(tree.leaf_of(x) == 0);
  x << 1e300;
  CHECK(tree.leaf_of(x) == 1);

  RandomForest f;
  f.num_train = 3;
  f.num_features = 1;
  f.num_outputs = 1;
  f.trees = {tree};
  x << 0.7;
  const auto members = co_membership(f, x);
  REQUIRE(members.size() == 1);
  CHECK(*members[0] == std::vector<int>{1, 2});
}

TEST_CASE("leaves partition the training days in every tree") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto data = noisy_data(40, 5, 2, seed);
    const auto f = fit_forest(data.X, data.Y, params(6, 1 + static_cast<int>(seed % 7), 2, seed));
    for (const auto& tree : f.trees) {
      std::vector<int> seen;
      for (const auto& leaf : tree.leaves()) {
        CHECK(std::is_sorted(leaf.members.begin(), leaf.members.end()));
        seen.insert(seen.end(), leaf.members.begin(), leaf.members.end());
      }
      std::sort(seen.begin(), seen.end());
      std::vector<int> all(40);
      std::iota(all.begin(), all.end(), 0);
      CHECK(seen == all);
      for (int i = 0; i < 40; ++i) {
        const auto& leaf = tree.leaf(tree.leaf_of(data.X.row(i).transpose()));
        CHECK(std::binary_search(leaf.members.begin(), leaf.members.end(), i));
      }
    }
  }
}

TEST_CASE("training error is nonincreasing in depth") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto data = noisy_data(50, 4, 3, 100 + seed);
    double previous = std::numeric_limits<double>::infinity();
    for (int depth = 0; depth <= 8; ++depth) {
      auto p = params(1, depth, 2, seed);
      p.bootstrap = false;
      const double mse = training_mse(fit_forest(data.X, data.Y, p), data);
      CHECK(mse <= previous + 1e-12);
      previous = mse;
    }
  }
}

TEST_CASE("importance finds the only informative feature") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd X(200, 6);
  Eigen::MatrixXd Y(200, 2);
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 6; ++j) X(i, j) = n01(rng);
    Y(i, 0) = 5.0 * X(i, 3);
    Y(i, 1) = -2.0 * X(i, 3) + 0.1 * n01(rng);
  }
  const auto imp = feature_importance(fit_forest(X, Y, params(50, 8, 2)));
  Eigen::Index arg = 0;
  imp.values.maxCoeff(&arg);
  CHECK(arg == 3);
  CHECK(imp.values.sum() == doctest::Approx(1.0));
  CHECK((imp.values.array() >= 0.0).all());
  CHECK_FALSE(imp.no_splits);
}

TEST_CASE("importance of a forest without splits is uniform and flagged") {
  const auto data = noisy_data(10, 4, 1, 2);
  const auto imp = feature_importance(fit_forest(data.X, data.Y, params(3, 0, 2)));
  CHECK(imp.no_splits);
  for (Eigen::Index j = 0; j < 4; ++j) CHECK(imp.values[j] == doctest::Approx(0.25));
}

TEST_CASE("duplicated informative feature splits its importance") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  const int D = 300;
  Eigen::MatrixXd base(D, 5);
  Eigen::MatrixXd Y(D, 1);
  for (int i = 0; i < D; ++i) {
    for (int j = 0; j < 5; ++j) base(i, j) = n01(rng);
    Y(i, 0) = 3.0 * base(i, 0) + 0.2 * n01(rng);
  }
  Eigen::MatrixXd dup(D, 6);
  dup << base.col(0), base.col(0), base.rightCols(4);
  const auto single = feature_importance(fit_forest(base, Y, params(100, 6, 2, 3)));
  const auto doubled = feature_importance(fit_forest(dup, Y, params(100, 6, 2, 3)));
  const double combined = doubled.values[0] + doubled.values[1];
  CHECK(std::abs(combined - single.values[0]) <= 0.2 * single.values[0]);
  CHECK(doubled.values[1] > 0.0);
}

TEST_CASE("mtry rules") {
  CHECK(resolve_mtry(MtryRule::Sqrt, 172) == 13);
  CHECK(resolve_mtry(MtryRule::Frac03, 172) == 52);
  CHECK(resolve_mtry(MtryRule::Frac06, 172) == 103);
  CHECK(resolve_mtry(MtryRule::Sqrt, 2) == 1);
  CHECK(resolve_mtry(MtryRule::Frac03, 1) == 1);
  for (auto rule : {MtryRule::Sqrt, MtryRule::Frac03, MtryRule::Frac06}) CHECK(parse_mtry_rule(to_string(rule)) == rule);
  CHECK_THROWS_AS((void)parse_mtry_rule("half"), Error);
}

TEST_CASE("invalid fits") {
  const auto data = noisy_data(10, 3, 1, 1);
  CHECK_THROWS_AS((void)fit_forest(Eigen::MatrixXd(0, 3), Eigen::MatrixXd(0, 1), params(1, 1, 1)), Error);
  CHECK_THROWS_AS((void)fit_forest(data.X, data.Y, params(1, 1, 4)), Error);
  CHECK_THROWS_AS((void)fit_forest(data.X, data.Y.topRows(5), params(1, 1, 1)), Error);
  const auto f = fit_forest(data.X, data.Y, params(2, 2, 1));
  CHECK_THROWS_AS((void)predict(f, Eigen::VectorXd::Zero(2)), Error);
}

TEST_CASE("serialization round trip") {
  const auto data = noisy_data(30, 4, 3, 12);
  const auto f = fit_forest(data.X, data.Y, params(7, 4, 2, 5), 1, {"a", "b", "c", "d"});
  const auto back = forest_from_json(nlohmann::json::parse(to_json(f).dump()));
  CHECK(back.covariate_names == f.covariate_names);
  CHECK(to_json(back).dump() == to_json(f).dump());
  for (int i = 0; i < 30; ++i) {
    CHECK(predict(back, data.X.row(i).transpose()) == predict(f, data.X.row(i).transpose()));
  }
}
