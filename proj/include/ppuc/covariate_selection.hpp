#pragma once

#include <Eigen/Core>

#include <vector>

#include "json.hpp"
#include "ppuc/forest.hpp"

namespace ppuc {

/// Sample Pearson correlation; 0 when either column is constant.
[[nodiscard]] double pcc(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Max |PCC| of every column of X against every column of targets.
[[nodiscard]] Eigen::VectorXd max_abs_pcc(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets);

struct PccFilterResult {
  std::vector<int> kept;  ///< ascending column indices
  bool fallback = false;  ///< nothing passed; kept holds the top 10% by |PCC|
};

/// Keeps columns with max |PCC| >= threshold. Columns flagged in `bypass`
/// are kept regardless.
[[nodiscard]] PccFilterResult pcc_filter(const Eigen::VectorXd& scores, double threshold,
                                         const std::vector<bool>& bypass = {});

struct RfeOptions {
  ForestParams forest;             ///< mtry is overwritten from `mtry` each round
  MtryRule mtry = MtryRule::Frac03;
  double step = 0.1;               ///< fraction removed per round
  int jobs = 1;
};

struct RfeResult {
  std::vector<int> final_set;   ///< ascending
  std::vector<int> eliminated;  ///< in elimination order
  std::vector<int> set_sizes;   ///< size before each round, then the final size
};

/// Recursive feature elimination over `candidates` (column indices of X).
[[nodiscard]] RfeResult rfe(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const std::vector<int>& candidates,
                            int target_count, const RfeOptions& options);

struct SelectionReport {
  std::vector<std::string> covariate_names;
  Eigen::VectorXd pcc_values;  ///< max |PCC| per candidate
  double threshold = 0.6;
  std::vector<int> kept_after_pcc;
  bool pcc_fallback = false;
  std::vector<int> rfe_eliminated;
  std::vector<int> final_set;
};

/// PCC filter on the system-aggregate hourly targets, then RFE on the labels.
/// X and Y are training rows only.
[[nodiscard]] SelectionReport select_covariates(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                                const Eigen::MatrixXd& hourly_targets,
                                                const std::vector<bool>& calendar_columns,
                                                std::vector<std::string> names, double threshold, int target_count,
                                                const RfeOptions& options);

[[nodiscard]] nlohmann::json to_json(const SelectionReport& report);
[[nodiscard]] SelectionReport selection_from_json(const nlohmann::json& doc);

}  // namespace ppuc
