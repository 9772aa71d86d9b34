#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ppuc/dataset.hpp"
#include "ppuc/tuning.hpp"

namespace ppuc {

enum class Method { IUC, WCSUC, EWCSUC, NSUC, PFUC };

inline constexpr Method kAllMethods[] = {Method::IUC, Method::WCSUC, Method::EWCSUC, Method::NSUC, Method::PFUC};

[[nodiscard]] const char* to_string(Method method);
[[nodiscard]] Method parse_method(const std::string& text);

struct MethodResult {
  Method method = Method::IUC;
  std::vector<double> costs;      ///< per test day, $
  std::vector<double> unserved;   ///< per test day, MWh
  std::vector<int> scenarios;     ///< scenarios in the day's MILP
  std::vector<double> solve_seconds;
  double weight_seconds = 0.0;    ///< forest fit + weight evaluation

  [[nodiscard]] double mean_cost() const;
  [[nodiscard]] double stddev_cost() const;
  [[nodiscard]] double mue() const;
};

struct BenchmarkConfig {
  HyperParams wcsuc;
  HyperParams ewcsuc;  ///< xi_factor is ignored
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
};

struct Benchmark {
  std::vector<Date> days;
  std::vector<MethodResult> results;  ///< in BenchmarkConfig::methods order

  [[nodiscard]] const MethodResult& at(Method m) const;
};

/// Scores every requested method on every test day.
[[nodiscard]] Benchmark run_benchmark(const Sample& train, const Sample& test, const BenchmarkConfig& config,
                                      const StudyContext& ctx);

struct SweepRow {
  int D = 0;
  double xi_factor = 1.0;
  Benchmark benchmark;
};

/// Uses the first D training rows for each D; depth and mtry stay fixed and
/// xi is re-tuned on the validation sample.
[[nodiscard]] std::vector<SweepRow> sweep_training_size(const Sample& train, const Sample& validation,
                                                        const Sample& test, const HyperParams& base,
                                                        const std::vector<double>& xi_factors,
                                                        const std::vector<int>& sizes,
                                                        const std::vector<Method>& methods, const StudyContext& ctx);

struct CovariateSet {
  std::string name;
  std::vector<int> columns;
};

struct AblationRow {
  std::string name;
  int num_covariates = 0;
  double mean_cost = 0.0;  ///< w-CSUC on the test sample
  double mue = 0.0;
  std::vector<double> weight_seconds;  ///< one per timing run

  [[nodiscard]] double mean_weight_seconds() const;
};

/// Scores w-CSUC with a common configuration on each covariate set and times
/// forest fitting plus all test-day weight evaluations over `runs` repetitions.
[[nodiscard]] std::vector<AblationRow> ablate_covariates(const Dataset& dataset, const std::vector<CovariateSet>& sets,
                                                         const HyperParams& config, int runs,
                                                         const StudyContext& ctx);

/// Seconds to fit the forest and compute weights for every row of `test`.
[[nodiscard]] double time_weight_evaluation(const Sample& train, const Sample& test, const HyperParams& config,
                                            const StudyContext& ctx);

}  // namespace ppuc
