#include "ppuc/weights.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <string>

#include "ppuc/error.hpp"

namespace ppuc {

Eigen::VectorXd empirical_weights(const RandomForest& forest, const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(forest.num_train);
  const auto sets = co_membership(forest, x);
  for (const auto* members : sets) {
    if (members->empty()) throw Error("forest leaf reached by a covariate vector has no training members");
    const double share = 1.0 / static_cast<double>(members->size());
    for (int d : *members) w[d] += share;
  }
  return w / static_cast<double>(sets.size());
}

Eigen::VectorXd transform_weights(const Eigen::VectorXd& weights, int D, double xi) {
  if (!(xi > 0.0) || !std::isfinite(xi)) throw ValidationError("xi must be positive and finite");
  if (D < 1) throw ValidationError("D must be positive");
  check_weights(weights);
  const double exponent = static_cast<double>(D) / xi;
  if (exponent == 1.0) return weights;

  const double top = weights.maxCoeff();
  Eigen::VectorXd out(weights.size());
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    out[i] = weights[i] > 0.0 ? std::pow(weights[i] / top, exponent) : 0.0;
  }
  const double total = out.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    spdlog::warn("weight transform with exponent {} degenerated; using untransformed weights", exponent);
    return weights;
  }
  return out / total;
}

SparseWeights sparsify(const Eigen::VectorXd& weights, double eps) {
  if (weights.size() == 0) throw ValidationError("cannot sparsify an empty weight vector");
  SparseWeights out;
  Eigen::Index top = 0;
  weights.maxCoeff(&top);
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] >= eps || i == top) out.indices.push_back(static_cast<int>(i));
  }
  out.weights.resize(static_cast<Eigen::Index>(out.indices.size()));
  for (std::size_t k = 0; k < out.indices.size(); ++k) out.weights[static_cast<Eigen::Index>(k)] = weights[out.indices[k]];
  out.weights /= out.weights.sum();
  return out;
}

void check_weights(const Eigen::VectorXd& weights, double tol) {
  if (weights.size() == 0) throw ValidationError("weight vector is empty");
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || weights[i] > 1.0 + tol) {
      throw ValidationError("weight " + std::to_string(i) + " = " + std::to_string(weights[i]) + " outside [0, 1]");
    }
  }
  const double total = weights.sum();
  if (std::abs(total - 1.0) > tol) throw ValidationError("weights sum to " + std::to_string(total) + ", not 1");
}

double entropy(const Eigen::VectorXd& weights) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) h -= weights[i] * std::log(weights[i]);
  }
  return h;
}

}  // namespace ppuc
