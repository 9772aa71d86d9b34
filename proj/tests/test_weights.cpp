#include <doctest.h>

#include <random>

#include "ppuc/error.hpp"
#include "ppuc/weights.hpp"
#include "support.hpp"

using namespace ppuc;

namespace {

RegressionTree stump(std::vector<int> left, std::vector<int> right) {
  std::vector<TreeNode> nodes(3);
  nodes[0].feature = 0;
  nodes[0].threshold = 0.5;
  nodes[0].left = 1;
  nodes[0].right = 2;
  nodes[1].leaf = 0;
  nodes[2].leaf = 1;
  std::vector<TreeLeaf> leaves(2);
  leaves[0].members = std::move(left);
  leaves[0].mean = Eigen::VectorXd::Zero(1);
  leaves[1].members = std::move(right);
  leaves[1].mean = Eigen::VectorXd::Zero(1);
  return {nodes, leaves};
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("leaf co-occurrence weights by hand") {
  RandomForest f;
  f.num_train = 4;
  f.num_features = 1;
  f.num_outputs = 1;
  f.trees = {stump({2, 3}, {0, 1}), stump({0, 2, 3}, {1})};
  const auto w = empirical_weights(f, vec({0.9}));
  CHECK((w - vec({0.25, 0.75, 0.0, 0.0})).norm() < 1e-15);
}

TEST_CASE("depth-0 forest weights are uniform") {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(13, 3);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Random(13, 2);
  ForestParams p;
  p.n_trees = 5;
  p.max_depth = 0;
  p.mtry = 1;
  const auto w = empirical_weights(fit_forest(X, Y, p), X.row(0).transpose());
  CHECK((w.array() - 1.0 / 13).abs().maxCoeff() < 1e-15);

  const auto one = fit_forest(X.topRows(1), Y.topRows(1), p);
  CHECK(empirical_weights(one, X.row(5).transpose())[0] == 1.0);
}

TEST_CASE("empirical weights equal a brute-force recount") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int D = 2 + static_cast<int>(rng() % 29);
    const int d = 1 + static_cast<int>(rng() % 8);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd X(D, d);
    Eigen::MatrixXd Y(D, 3);
    for (int i = 0; i < D; ++i) {
      for (int j = 0; j < d; ++j) X(i, j) = std::round(4.0 * n01(rng)) / 4.0;
      for (int k = 0; k < 3; ++k) Y(i, k) = X(i, k % d) + n01(rng);
    }
    ForestParams p;
    p.n_trees = 1 + static_cast<int>(rng() % 10);
    p.max_depth = static_cast<int>(rng() % 6);
    p.mtry = 1 + static_cast<int>(rng() % static_cast<unsigned>(d));
    p.seed = rng();
    const auto forest = fit_forest(X, Y, p);
    for (int q = 0; q < 5; ++q) {
      Eigen::VectorXd x(d);
      for (int j = 0; j < d; ++j) x[j] = n01(rng);
      const auto w = empirical_weights(forest, x);
      CHECK((w - testing::brute_force_weights(forest, X, x)).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("transform by hand") {
  const auto w = transform_weights(vec({0.25, 0.75}), 4, 2.0);
  CHECK((w - vec({0.1, 0.9})).norm() < 1e-15);
}

TEST_CASE("xi = D is the identity") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto w = testing::random_simplex(rng, 20);
    CHECK(transform_weights(w, 20, 20.0) == w);
  }
}

TEST_CASE("uniform weights stay uniform") {
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(8, 1.0 / 8);
  for (double xi : {0.8, 2.0, 8.0, 32.0, 80.0}) {
    CHECK((transform_weights(u, 8, xi) - u).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("transform properties on random probability vectors") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(2, 60);
  const double factors[] = {0.1, 0.25, 0.5, 2.0, 4.0, 10.0};
  for (int trial = 0; trial < 1000; ++trial) {
    const int D = size(rng);
    const auto w = testing::random_simplex(rng, D);
    const double xi = factors[trial % 6] * D;
    const auto out = transform_weights(w, D, xi);
    check_weights(out);
    for (int i = 0; i < D; ++i) {
      CHECK((out[i] == 0.0) == (w[i] == 0.0));
      for (int j = 0; j < D; ++j) {
        if (w[i] < w[j]) CHECK(out[i] <= out[j]);
        if (w[i] == w[j]) CHECK(out[i] == out[j]);
      }
    }
    const double exponent = D / xi;
    if (exponent > 1.0) CHECK(testing::shannon(out) <= testing::shannon(w) + 1e-12);
    if (exponent < 1.0) CHECK(testing::shannon(out) >= testing::shannon(w) - 1e-12);
  }
}

TEST_CASE("sharp transform of a tiny tail does not underflow to nothing") {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(4, 1e-300);
  w[0] = 1.0 - 3e-300;
  const auto out = transform_weights(w, 400, 1.0);
  CHECK(out[0] == 1.0);
  CHECK(out.sum() == 1.0);
}

TEST_CASE("invalid transform arguments") {
  CHECK_THROWS_AS((void)transform_weights(vec({0.5, 0.5}), 2, 0.0), Error);
  CHECK_THROWS_AS((void)transform_weights(vec({0.5, 0.6}), 2, 1.0), Error);
  CHECK_THROWS_AS((void)transform_weights(vec({-0.5, 1.5}), 2, 1.0), Error);
}

TEST_CASE("sparsify") {
  SUBCASE("three nonzeros") {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(100);
    w[3] = 0.5;
    w[40] = 0.3;
    w[77] = 0.2;
    const auto s = sparsify(w);
    CHECK(s.indices == std::vector<int>{3, 40, 77});
    CHECK(s.weights.sum() == doctest::Approx(1.0));
  }
  SUBCASE("uniform keeps all") {
    const auto s = sparsify(Eigen::VectorXd::Constant(50, 0.02));
    CHECK(s.indices.size() == 50);
  }
  SUBCASE("dominant entry") {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(5);
    w[0] = 1.0 - 1e-12;
    w[1] = 1e-12;
    const auto s = sparsify(w);
    CHECK(s.indices == std::vector<int>{0});
    CHECK(s.weights[0] == 1.0);
  }
  SUBCASE("dropped mass is below eps times D") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 200; ++t) {
      Eigen::VectorXd w = testing::random_simplex(rng, 30);
      for (int i = 0; i < 30; i += 3) w[i] *= 1e-10;
      w /= w.sum();
      const auto s = sparsify(w, 1e-9);
      double kept = 0.0;
      for (int i : s.indices) kept += w[i];
      CHECK(1.0 - kept < 1e-9 * 30 + 1e-15);
      CHECK_FALSE(s.indices.empty());
    }
  }
}

TEST_CASE("entropy") {
  CHECK(entropy(vec({1.0, 0.0})) == 0.0);
  CHECK(entropy(vec({0.5, 0.5})) == doctest::Approx(std::log(2.0)));
}
