#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ppuc/dataset.hpp"
#include "ppuc/evaluation.hpp"
#include "ppuc/tuning.hpp"

namespace ppuc {

/// Everything a pipeline stage needs. Stages hand off through files in `out`.
struct RunConfig {
  std::filesystem::path system;
  std::filesystem::path data;
  std::filesystem::path holidays;
  std::filesystem::path out = "out";
  DateRange train_range{parse_date("2018-06-01"), parse_date("2019-05-31")};
  DateRange val_range{parse_date("2019-06-01"), parse_date("2019-06-30")};
  DateRange test_range{parse_date("2019-07-01"), parse_date("2019-08-31")};
  std::uint64_t seed = 42;
  int jobs = 1;
  double mip_gap = 1e-6;
  double time_limit = milp::kInf;

  int n_trees = 100;
  int min_leaf = 1;
  GridSpec grid;

  double pcc_threshold = 0.6;
  int target_features = 25;
  int select_depth = 6;
  MtryRule select_mtry = MtryRule::Frac03;
  double rfe_step = 0.1;

  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  std::vector<int> d_sweep;  ///< empty: no sweep study
  int ablation_runs = 30;    ///< 0: no ablation study
};

/// Stage-local seed derived from the global one.
[[nodiscard]] std::uint64_t stage_seed(const RunConfig& config, int stage);
[[nodiscard]] StudyContext study_context(const RunConfig& config, const SystemModel& system);

/// ingest -> build covariates -> scale -> split; writes dataset.json and prep_summary.json.
std::string cmd_prep(const RunConfig& config);
/// PCC filter then RFE on the training split; writes selection.json.
std::string cmd_select(const RunConfig& config);
/// Grid search on the validation split; writes tuning.csv and best_config.json.
std::string cmd_tune(const RunConfig& config);
/// Benchmark, plus sweep and ablation when configured; writes CSV reports and forest.json.
std::string cmd_run(const RunConfig& config);

/// Fixed-precision formatting used in every report.
[[nodiscard]] std::string format_number(double value, int decimals = 6);

}  // namespace ppuc
