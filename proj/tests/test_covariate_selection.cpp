#include <doctest.h>

#include <random>

#include "ppuc/covariate_selection.hpp"
#include "ppuc/error.hpp"
#include "support.hpp"

using namespace ppuc;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// Textbook single-pass formula.
double pcc_oracle(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(x.size());
  const double sx = x.sum(), sy = y.sum();
  const double sxx = x.squaredNorm(), syy = y.squaredNorm(), sxy = x.dot(y);
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

RfeOptions rfe_options(std::uint64_t seed) {
  RfeOptions o;
  o.forest.n_trees = 50;
  o.forest.max_depth = 6;
  o.forest.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("pcc examples") {
  CHECK(pcc(vec({1, 2, 3}), vec({2, 4, 6})) == doctest::Approx(1.0));
  CHECK(pcc(vec({1, 2, 3}), vec({3, 2, 1})) == doctest::Approx(-1.0));
  CHECK(pcc(vec({4, 4, 4}), vec({1, 2, 3})) == 0.0);
  CHECK(pcc(vec({1, 2, 3}), vec({7, 7, 7})) == 0.0);
  CHECK_THROWS_AS((void)pcc(vec({1}), vec({1})), ValidationError);
  CHECK_THROWS_AS((void)pcc(vec({1, 2}), vec({1, 2, 3})), ValidationError);
}

TEST_CASE("pcc matches the textbook formula, is symmetric and scale invariant") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 40);
    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = n01(rng);
      y[i] = 0.5 * x[i] + n01(rng);
    }
    const double r = pcc(x, y);
    CHECK(r == doctest::Approx(pcc_oracle(x, y)).epsilon(1e-9));
    CHECK(r == doctest::Approx(pcc(y, x)).epsilon(1e-12));
    CHECK(std::abs(r) <= 1.0);
    double a = coef(rng);
    if (std::abs(a) < 1e-3) a = 1.0;
    const Eigen::VectorXd z = (a * x.array() + coef(rng)).matrix();
    CHECK(pcc(z, y) == doctest::Approx((a > 0 ? 1.0 : -1.0) * r).epsilon(1e-9));
  }
}

TEST_CASE("pcc filter") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n01;
  const int D = 400;
  Eigen::MatrixXd targets(D, 24);
  for (int i = 0; i < D; ++i) {
    for (int h = 0; h < 24; ++h) targets(i, h) = n01(rng);
  }
  Eigen::MatrixXd X(D, 4);
  X.col(0) = targets.col(12);  // next-day hour 12
  for (int i = 0; i < D; ++i) X(i, 1) = n01(rng);
  X.col(2).setConstant(3.0);
  X.col(3) = 0.2 * targets.col(5) + Eigen::VectorXd::NullaryExpr(D, [&] { return n01(rng); });
  const auto scores = max_abs_pcc(X, targets);
  CHECK(scores[0] == doctest::Approx(1.0));
  CHECK(scores[2] == 0.0);

  const auto kept = pcc_filter(scores, 0.6);
  CHECK(kept.kept == std::vector<int>{0});
  CHECK_FALSE(kept.fallback);

  CHECK(pcc_filter(scores, 0.0).kept == std::vector<int>{0, 1, 3});
  CHECK(pcc_filter(scores, 0.6, {false, false, true, false}).kept == std::vector<int>{0, 2});
}

TEST_CASE("pcc filter falls back to the top tenth") {
  Eigen::VectorXd scores(20);
  for (int j = 0; j < 20; ++j) scores[j] = 0.01 * j;
  const auto out = pcc_filter(scores, 0.6);
  CHECK(out.fallback);
  CHECK(out.kept == std::vector<int>{18, 19});
}

TEST_CASE("rfe with target equal to the candidate count is the identity") {
  const auto data = testing::signal_noise(1, 60);
  const std::vector<int> candidates{7, 2, 30};
  const auto r = rfe(data.X, data.targets, candidates, 3, rfe_options(1));
  CHECK(r.final_set == std::vector<int>{2, 7, 30});
  CHECK(r.eliminated.empty());
  CHECK(r.set_sizes == std::vector<int>{3});
}

TEST_CASE("rfe set sizes strictly decrease to the target") {
  const auto data = testing::signal_noise(2, 80);
  std::vector<int> all(40);
  for (int j = 0; j < 40; ++j) all[static_cast<std::size_t>(j)] = j;
  for (int target : {1, 3, 17, 39}) {
    const auto r = rfe(data.X, data.targets, all, target, rfe_options(5));
    CHECK(r.set_sizes.front() == 40);
    CHECK(r.set_sizes.back() == target);
    for (std::size_t k = 1; k < r.set_sizes.size(); ++k) CHECK(r.set_sizes[k] < r.set_sizes[k - 1]);
    CHECK(static_cast<int>(r.final_set.size()) == target);
    CHECK(static_cast<int>(r.eliminated.size()) == 40 - target);
    const auto again = rfe(data.X, data.targets, all, target, rfe_options(5));
    CHECK(again.eliminated == r.eliminated);
  }
  CHECK_THROWS_AS((void)rfe(data.X, data.targets, all, 0, rfe_options(5)), ValidationError);
  CHECK_THROWS_AS((void)rfe(data.X, data.targets, {1, 2}, 3, rfe_options(5)), ValidationError);
}

TEST_CASE("rfe alone recovers the signal covariates from all candidates") {
  std::vector<int> all(40);
  for (int j = 0; j < 40; ++j) all[static_cast<std::size_t>(j)] = j;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = testing::signal_noise(seed);
    CHECK(rfe(data.X, data.targets, all, 3, rfe_options(seed)).final_set == data.signal);
  }
}

TEST_CASE("filter plus rfe recovers the signal covariates") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const auto data = testing::signal_noise(seed);
    const auto report = select_covariates(data.X, data.targets, data.targets, std::vector<bool>(40, false),
                                          std::vector<std::string>(40, "c"), 0.6, 3, rfe_options(seed));
    CHECK(report.final_set == data.signal);
    for (int j : report.final_set) {
      CHECK(std::binary_search(report.kept_after_pcc.begin(), report.kept_after_pcc.end(), j));
    }
    // Decoys pass the filter, so rfe has work to do.
    CHECK(report.kept_after_pcc.size() > 3);
  }
}

TEST_CASE("selection report round trip") {
  const auto data = testing::signal_noise(4, 60);
  std::vector<std::string> names;
  for (int j = 0; j < 40; ++j) names.push_back("x" + std::to_string(j));
  const auto report = select_covariates(data.X, data.targets, data.targets, std::vector<bool>(40, false), names, 0.5,
                                        3, rfe_options(4));
  const auto back = selection_from_json(nlohmann::json::parse(to_json(report).dump()));
  CHECK(back.final_set == report.final_set);
  CHECK(back.kept_after_pcc == report.kept_after_pcc);
  CHECK(back.rfe_eliminated == report.rfe_eliminated);
  CHECK(back.covariate_names == names);
  CHECK(back.pcc_values == report.pcc_values);
  CHECK_THROWS_AS((void)selection_from_json(nlohmann::json::object()), ParseError);
}
