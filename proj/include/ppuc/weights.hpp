#pragma once

#include <Eigen/Core>

#include <vector>

#include "ppuc/forest.hpp"

namespace ppuc {

/// Leaf co-occurrence weights over the D training days (each tree contributes
/// a uniform distribution over the members of x's leaf).
[[nodiscard]] Eigen::VectorXd empirical_weights(const RandomForest& forest,
                                                const Eigen::Ref<const Eigen::VectorXd>& x);

/// phi(w) = w^(D/xi), renormalized. xi < D sharpens, xi > D flattens.
[[nodiscard]] Eigen::VectorXd transform_weights(const Eigen::VectorXd& weights, int D, double xi);

struct SparseWeights {
  std::vector<int> indices;
  Eigen::VectorXd weights;  ///< renormalized, sums to 1
};

/// Drops entries below eps and renormalizes. The largest entry always survives.
[[nodiscard]] SparseWeights sparsify(const Eigen::VectorXd& weights, double eps = 1e-9);

/// Throws ValidationError unless entries are in [0, 1] and sum to 1 within tol.
void check_weights(const Eigen::VectorXd& weights, double tol = 1e-9);

/// Shannon entropy in nats, with 0 log 0 = 0.
[[nodiscard]] double entropy(const Eigen::VectorXd& weights);

}  // namespace ppuc
