#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ppuc {

struct ForestParams {
  int n_trees = 100;
  int max_depth = 6;
  int mtry = 1;  ///< candidate features per split
  int min_leaf = 1;
  std::uint64_t seed = 0;
  /// Grow each tree on a bootstrap resample; off grows on the full training set.
  bool bootstrap = true;
};

struct TreeNode {
  int feature = -1;
  double threshold = 0.0;  ///< x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  int leaf = -1;      ///< leaf id, or -1 for internal nodes
  double gain = 0.0;  ///< SSE reduction of the split
};

struct TreeLeaf {
  std::vector<int> members;  ///< original training indices, ascending
  Eigen::VectorXd mean;      ///< mean bootstrap label
};

class RegressionTree {
 public:
  RegressionTree() = default;
  RegressionTree(std::vector<TreeNode> nodes, std::vector<TreeLeaf> leaves)
      : nodes_(std::move(nodes)), leaves_(std::move(leaves)) {}

  [[nodiscard]] int leaf_of(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  [[nodiscard]] const TreeLeaf& leaf(int id) const { return leaves_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] const std::vector<TreeNode>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<TreeLeaf>& leaves() const { return leaves_; }
  [[nodiscard]] int depth() const;

 private:
  std::vector<TreeNode> nodes_;  // root is nodes_[0]
  std::vector<TreeLeaf> leaves_;
};

struct RandomForest {
  ForestParams params;
  std::vector<RegressionTree> trees;
  std::vector<std::string> covariate_names;
  int num_train = 0;
  int num_features = 0;
  int num_outputs = 0;
};

/// Grows params.n_trees CART trees. X is D x d_x, Y is D x d_y.
[[nodiscard]] RandomForest fit_forest(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const ForestParams& params,
                                      int jobs = 1, std::vector<std::string> covariate_names = {});

/// Average of the leaf means reached by x.
[[nodiscard]] Eigen::VectorXd predict(const RandomForest& forest, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Per tree, the training indices sharing x's leaf.
[[nodiscard]] std::vector<const std::vector<int>*> co_membership(const RandomForest& forest,
                                                                 const Eigen::Ref<const Eigen::VectorXd>& x);

struct FeatureImportance {
  Eigen::VectorXd values;     ///< sums to 1
  bool no_splits = false;     ///< forest has no splits; values are uniform
};

[[nodiscard]] FeatureImportance feature_importance(const RandomForest& forest);

/// mtry candidate rules from the tuning grid.
enum class MtryRule { Sqrt, Frac03, Frac06 };

[[nodiscard]] int resolve_mtry(MtryRule rule, int num_features);
[[nodiscard]] const char* to_string(MtryRule rule);
[[nodiscard]] MtryRule parse_mtry_rule(const std::string& text);

[[nodiscard]] nlohmann::json to_json(const RandomForest& forest);
[[nodiscard]] RandomForest forest_from_json(const nlohmann::json& doc);
void save_forest(const RandomForest& forest, const std::filesystem::path& path);
[[nodiscard]] RandomForest load_forest(const std::filesystem::path& path);

}  // namespace ppuc
