#include "ppuc/forest.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "ppuc/error.hpp"
#include "ppuc/parallel.hpp"

namespace ppuc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform draw in [0, n) by rejection; portable across standard libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

/// Centered labels rotated onto their nonzero principal directions. Squared
/// distances between rows, and therefore every node SSE, are unchanged.
Eigen::MatrixXd compress_labels(const Eigen::MatrixXd& Y) {
  const Eigen::RowVectorXd mean = Y.colwise().mean();
  Eigen::MatrixXd centered = Y.rowwise() - mean;
  if (Y.rows() < 2 || Y.cols() < 2) return centered;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > 1e-9 * s[0]) ++rank;
  if (rank >= Y.cols()) return centered;
  return svd.matrixU().leftCols(rank) * s.head(rank).asDiagonal();
}

class TreeGrower {
 public:
  TreeGrower(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z, const ForestParams& params, std::uint64_t seed)
      : X_(X), Z_(Z), params_(params), seed_(seed) {}

  int grow(std::vector<int> samples, int depth, std::uint64_t key) {
    const int idx = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const auto n = static_cast<Eigen::Index>(samples.size());

    Eigen::VectorXd total = Eigen::VectorXd::Zero(Z_.cols());
    double sumsq = 0.0;
    for (int s : samples) {
      total += Z_.row(s).transpose();
      sumsq += Z_.row(s).squaredNorm();
    }
    const double base = total.squaredNorm() / static_cast<double>(n);
    const double sse = sumsq - base;

    Split best;
    if (depth < params_.max_depth && n >= 2 * params_.min_leaf && sse > 1e-12 * std::max(1.0, sumsq)) {
      best = find_split(samples, total, base, key);
    }
    if (best.feature < 0) {
      nodes_[idx].leaf = static_cast<int>(leaf_samples_.size());
      leaf_samples_.push_back(std::move(samples));
      return idx;
    }

    std::vector<int> left, right;
    for (int s : samples) (X_(s, best.feature) <= best.threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();
    nodes_[idx].feature = best.feature;
    nodes_[idx].threshold = best.threshold;
    nodes_[idx].gain = best.gain;
    const int l = grow(std::move(left), depth + 1, splitmix64(key * 2 + 0));
    const int r = grow(std::move(right), depth + 1, splitmix64(key * 2 + 1));
    nodes_[idx].left = l;
    nodes_[idx].right = r;
    return idx;
  }

  std::vector<TreeNode> nodes_;
  std::vector<std::vector<int>> leaf_samples_;

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  // Candidate features are a function of the node's path from the root.
  std::vector<int> candidate_features(std::uint64_t key) const {
    const int d = static_cast<int>(X_.cols());
    std::vector<int> features(static_cast<std::size_t>(d));
    std::iota(features.begin(), features.end(), 0);
    std::mt19937_64 rng(splitmix64(seed_ ^ key));
    const int m = std::min(params_.mtry, d);
    for (int i = 0; i < m; ++i) {
      const auto j = static_cast<int>(i + bounded(rng, static_cast<std::uint64_t>(d - i)));
      std::swap(features[i], features[j]);
    }
    features.resize(static_cast<std::size_t>(m));
    std::sort(features.begin(), features.end());
    return features;
  }

  Split find_split(const std::vector<int>& samples, const Eigen::VectorXd& total, double base,
                   std::uint64_t key) const {
    const auto n = samples.size();
    const auto min_leaf = static_cast<std::size_t>(params_.min_leaf);
    Split best;
    std::vector<std::pair<double, int>> order(n);
    Eigen::VectorXd left(Z_.cols());
    for (int f : candidate_features(key)) {
      for (std::size_t i = 0; i < n; ++i) order[i] = {X_(samples[i], f), samples[i]};
      std::sort(order.begin(), order.end());
      if (order.front().first == order.back().first) continue;
      left.setZero();
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left += Z_.row(order[i].second).transpose();
        const double lo = order[i].first;
        const double hi = order[i + 1].first;
        if (lo == hi) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double score = left.squaredNorm() / static_cast<double>(nl) +
                             (total - left).squaredNorm() / static_cast<double>(nr);
        const double gain = score - base;
        if (gain > best.gain) {
          double threshold = lo + (hi - lo) / 2.0;
          if (threshold >= hi) threshold = lo;
          best = {f, threshold, gain};
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::MatrixXd& Z_;
  const ForestParams& params_;
  std::uint64_t seed_;
};

RegressionTree grow_tree(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& Z,
                         const ForestParams& params, int tree) {
  const auto D = static_cast<int>(X.rows());
  const std::uint64_t seed = splitmix64(params.seed ^ splitmix64(static_cast<std::uint64_t>(tree) + 1));
  std::vector<int> samples(static_cast<std::size_t>(D));
  if (params.bootstrap) {
    std::mt19937_64 rng(seed);
    for (auto& s : samples) s = static_cast<int>(bounded(rng, static_cast<std::uint64_t>(D)));
    std::sort(samples.begin(), samples.end());
  } else {
    std::iota(samples.begin(), samples.end(), 0);
  }

  TreeGrower grower(X, Z, params, seed);
  grower.grow(std::move(samples), 0, 1);

  std::vector<TreeLeaf> leaves(grower.leaf_samples_.size());
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    const auto& members = grower.leaf_samples_[l];
    leaves[l].mean = Eigen::VectorXd::Zero(Y.cols());
    for (int s : members) leaves[l].mean += Y.row(s).transpose();
    leaves[l].mean /= static_cast<double>(members.size());
  }
  RegressionTree shape(std::move(grower.nodes_), {});
  for (int d = 0; d < D; ++d) leaves[static_cast<std::size_t>(shape.leaf_of(X.row(d).transpose()))].members.push_back(d);
  return {shape.nodes(), std::move(leaves)};
}

void check_input(const RandomForest& forest, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != forest.num_features) {
    throw ValidationError("covariate vector has " + std::to_string(x.size()) + " entries, forest expects " +
                          std::to_string(forest.num_features));
  }
}

}  // namespace

int RegressionTree::leaf_of(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  int node = 0;
  while (nodes_[static_cast<std::size_t>(node)].leaf < 0) {
    const TreeNode& n = nodes_[static_cast<std::size_t>(node)];
    node = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(node)].leaf;
}

int RegressionTree::depth() const {
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    const auto [node, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const TreeNode& n = nodes_[static_cast<std::size_t>(node)];
    if (n.leaf < 0) {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return deepest;
}

RandomForest fit_forest(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const ForestParams& params, int jobs,
                        std::vector<std::string> covariate_names) {
  if (X.rows() == 0) throw ValidationError("cannot fit a forest on an empty training set");
  if (Y.rows() != X.rows()) throw ValidationError("feature and label row counts differ");
  if (params.n_trees < 1) throw ValidationError("n_trees must be positive");
  if (params.max_depth < 0) throw ValidationError("max_depth must be nonnegative");
  if (params.min_leaf < 1) throw ValidationError("min_leaf must be positive");
  if (params.mtry < 1 || params.mtry > X.cols()) {
    throw ValidationError("mtry " + std::to_string(params.mtry) + " outside [1, " + std::to_string(X.cols()) + "]");
  }
  if (!covariate_names.empty() && static_cast<Eigen::Index>(covariate_names.size()) != X.cols()) {
    throw ValidationError("covariate name count does not match feature columns");
  }

  const Eigen::MatrixXd Z = compress_labels(Y);
  RandomForest forest;
  forest.params = params;
  forest.covariate_names = std::move(covariate_names);
  forest.num_train = static_cast<int>(X.rows());
  forest.num_features = static_cast<int>(X.cols());
  forest.num_outputs = static_cast<int>(Y.cols());
  forest.trees.resize(static_cast<std::size_t>(params.n_trees));
  parallel_for(forest.trees.size(), jobs,
               [&](std::size_t t) { forest.trees[t] = grow_tree(X, Y, Z, params, static_cast<int>(t)); });
  return forest;
}

Eigen::VectorXd predict(const RandomForest& forest, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_input(forest, x);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(forest.num_outputs);
  for (const auto& tree : forest.trees) acc += tree.leaf(tree.leaf_of(x)).mean;
  return acc / static_cast<double>(forest.trees.size());
}

std::vector<const std::vector<int>*> co_membership(const RandomForest& forest,
                                                   const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_input(forest, x);
  std::vector<const std::vector<int>*> sets;
  sets.reserve(forest.trees.size());
  for (const auto& tree : forest.trees) sets.push_back(&tree.leaf(tree.leaf_of(x)).members);
  return sets;
}

FeatureImportance feature_importance(const RandomForest& forest) {
  FeatureImportance out;
  out.values = Eigen::VectorXd::Zero(forest.num_features);
  for (const auto& tree : forest.trees) {
    for (const auto& n : tree.nodes()) {
      if (n.leaf < 0) out.values[n.feature] += n.gain;
    }
  }
  const double total = out.values.sum();
  if (total > 0.0) {
    out.values /= total;
  } else {
    out.values.setConstant(1.0 / static_cast<double>(std::max(1, forest.num_features)));
    out.no_splits = true;
  }
  return out;
}

int resolve_mtry(MtryRule rule, int num_features) {
  const double d = num_features;
  double value = 1.0;
  switch (rule) {
    case MtryRule::Sqrt:
      value = std::sqrt(d);
      break;
    case MtryRule::Frac03:
      value = 0.3 * d;
      break;
    case MtryRule::Frac06:
      value = 0.6 * d;
      break;
  }
  return std::clamp(static_cast<int>(std::lround(value)), 1, std::max(1, num_features));
}

const char* to_string(MtryRule rule) {
  switch (rule) {
    case MtryRule::Sqrt:
      return "sqrt";
    case MtryRule::Frac03:
      return "0.3";
    case MtryRule::Frac06:
      return "0.6";
  }
  return "sqrt";
}

MtryRule parse_mtry_rule(const std::string& text) {
  if (text == "sqrt") return MtryRule::Sqrt;
  if (text == "0.3") return MtryRule::Frac03;
  if (text == "0.6") return MtryRule::Frac06;
  throw ParseError("unknown mtry rule '" + text + "' (expected sqrt, 0.3 or 0.6)");
}

nlohmann::json to_json(const RandomForest& forest) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : forest.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes()) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.leaf, n.gain});
    nlohmann::json leaves = nlohmann::json::array();
    for (const auto& l : tree.leaves()) {
      leaves.push_back({{"members", l.members}, {"mean", std::vector<double>(l.mean.data(), l.mean.data() + l.mean.size())}});
    }
    trees.push_back({{"nodes", nodes}, {"leaves", leaves}});
  }
  const auto& p = forest.params;
  return {{"params",
           {{"n_trees", p.n_trees},
            {"max_depth", p.max_depth},
            {"mtry", p.mtry},
            {"min_leaf", p.min_leaf},
            {"seed", p.seed},
            {"bootstrap", p.bootstrap}}},
          {"covariate_names", forest.covariate_names},
          {"num_train", forest.num_train},
          {"num_features", forest.num_features},
          {"num_outputs", forest.num_outputs},
          {"trees", trees}};
}

RandomForest forest_from_json(const nlohmann::json& doc) {
  try {
    RandomForest forest;
    const auto& p = doc.at("params");
    forest.params.n_trees = p.at("n_trees").get<int>();
    forest.params.max_depth = p.at("max_depth").get<int>();
    forest.params.mtry = p.at("mtry").get<int>();
    forest.params.min_leaf = p.at("min_leaf").get<int>();
    forest.params.seed = p.at("seed").get<std::uint64_t>();
    forest.params.bootstrap = p.value("bootstrap", true);
    forest.covariate_names = doc.value("covariate_names", std::vector<std::string>{});
    forest.num_train = doc.at("num_train").get<int>();
    forest.num_features = doc.at("num_features").get<int>();
    forest.num_outputs = doc.at("num_outputs").get<int>();
    for (const auto& t : doc.at("trees")) {
      std::vector<TreeNode> nodes;
      for (const auto& n : t.at("nodes")) {
        nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                         n.at(4).get<int>(), n.at(5).get<double>()});
      }
      std::vector<TreeLeaf> leaves;
      for (const auto& l : t.at("leaves")) {
        const auto mean = l.at("mean").get<std::vector<double>>();
        leaves.push_back({l.at("members").get<std::vector<int>>(),
                          Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()))});
      }
      forest.trees.emplace_back(std::move(nodes), std::move(leaves));
    }
    if (static_cast<int>(forest.trees.size()) != forest.params.n_trees) {
      throw ParseError("forest document lists " + std::to_string(forest.trees.size()) + " trees, params say " +
                       std::to_string(forest.params.n_trees));
    }
    return forest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed forest document: ") + e.what());
  }
}

void save_forest(const RandomForest& forest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << to_json(forest).dump() << '\n';
}

RandomForest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return forest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace ppuc
