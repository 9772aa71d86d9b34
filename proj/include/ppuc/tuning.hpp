#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "json.hpp"
#include "ppuc/dataset.hpp"
#include "ppuc/forest.hpp"
#include "ppuc/scuc.hpp"

namespace ppuc {

/// One point of the tuning grid. xi is stored as a multiple of D.
struct HyperParams {
  int max_depth = 6;
  MtryRule mtry = MtryRule::Sqrt;
  double xi_factor = 1.0;

  [[nodiscard]] double xi(int D) const { return xi_factor * D; }
  bool operator==(const HyperParams&) const = default;
};

struct GridSpec {
  std::vector<int> depths{3, 6, 10};
  std::vector<MtryRule> mtry{MtryRule::Sqrt, MtryRule::Frac03, MtryRule::Frac06};
  std::vector<double> xi_factors{0.1, 0.25, 1.0, 4.0, 10.0};
};

/// Cartesian product in (depth, mtry, xi) order.
[[nodiscard]] std::vector<HyperParams> make_grid(const GridSpec& spec);

/// Settings shared by every fit and solve of a study.
struct StudyContext {
  const SystemModel* system = nullptr;
  ForestParams forest;  ///< n_trees, min_leaf, seed, bootstrap; depth and mtry come from HyperParams
  UcOptions uc;
  int jobs = 1;
};

[[nodiscard]] ForestParams forest_params(const StudyContext& ctx, const HyperParams& cfg, int num_features);
[[nodiscard]] RandomForest fit_for(const StudyContext& ctx, const HyperParams& cfg, const Sample& train);

/// Realized cost of committing `schedule` when `y` materializes.
struct DayOutcome {
  double cost = 0.0;      ///< first-stage cost + Q(schedule; y), $
  double unserved = 0.0;  ///< MWh
};

[[nodiscard]] DayOutcome realized_outcome(const SystemModel& system, const CommitmentSchedule& schedule,
                                          const Eigen::MatrixXd& y, const milp::SolveOptions& options);

/// Commitment from weighted SAA over the training scenarios.
[[nodiscard]] UcSolution prescribe(const StudyContext& ctx, const Sample& train, const Eigen::VectorXd& weights);

struct ConfigResult {
  HyperParams config;
  int mtry = 0;
  double total_cost = 0.0;
  std::vector<double> day_costs;
  double wall_seconds = 0.0;
};

/// Total validation cost of one configuration.
[[nodiscard]] ConfigResult evaluate_config(const HyperParams& cfg, const Sample& train, const Sample& validation,
                                           const StudyContext& ctx);

/// True when a ranks strictly ahead of b: lower cost, then smaller depth,
/// smaller mtry, and xi closer to D.
[[nodiscard]] bool ranks_before(const ConfigResult& a, const ConfigResult& b);

struct TuningResult {
  std::vector<ConfigResult> configs;  ///< grid order
  int best = -1;
  int best_identity = -1;  ///< best among configs with xi = D, or -1

  [[nodiscard]] const ConfigResult& best_config() const { return configs.at(static_cast<std::size_t>(best)); }
};

[[nodiscard]] TuningResult tune(const Sample& train, const Sample& validation, const std::vector<HyperParams>& grid,
                                const StudyContext& ctx);

[[nodiscard]] nlohmann::json to_json(const HyperParams& cfg);
[[nodiscard]] HyperParams hyperparams_from_json(const nlohmann::json& doc);

}  // namespace ppuc
