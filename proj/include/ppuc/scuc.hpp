#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppuc/milp.hpp"
#include "ppuc/system_model.hpp"

namespace ppuc {

/// First-stage decisions: on/off, startup and shutdown indicators, G x H.
struct CommitmentSchedule {
  Eigen::MatrixXi u;
  Eigen::MatrixXi v;
  Eigen::MatrixXi w;

  [[nodiscard]] static CommitmentSchedule all_off(const SystemModel& system);
  /// Builds v and w from u and the units' initial status.
  [[nodiscard]] static CommitmentSchedule from_status(const SystemModel& system, const Eigen::MatrixXi& u);
};

/// Second-stage decisions for one net-load realization.
struct DispatchSolution {
  Eigen::MatrixXd p;                      ///< G x H, MW
  std::vector<Eigen::MatrixXd> segments;  ///< per generator, K_g x H
  Eigen::MatrixXd curtail;                ///< B x H, MW unserved
  Eigen::MatrixXd overgen;                ///< B x H, MW excess
  Eigen::MatrixXd line_flow;              ///< L x H, MW
  double cost = 0.0;                      ///< second-stage cost, $

  [[nodiscard]] double unserved_energy() const { return curtail.sum(); }
};

struct UcSolution {
  CommitmentSchedule schedule;
  double first_stage_cost = 0.0;
  std::vector<int> scenario_ids;    ///< indices into the caller's scenario list
  Eigen::VectorXd scenario_weights; ///< weights actually used, sum 1
  std::vector<DispatchSolution> dispatch;
  double objective = 0.0;
  milp::SolveStatus status = milp::SolveStatus::Error;
  double mip_gap = 0.0;
  double wall_time = 0.0;
};

struct UcOptions {
  milp::SolveOptions solver;
  /// Scenarios whose weight falls below this threshold are dropped.
  double sparsify_eps = 1e-9;
};

/// Commitment indicators as affine expressions: columns of a model, or
/// constants when the schedule is fixed.
struct CommitmentTerms {
  int generators = 0;
  int hours = 0;
  std::vector<milp::LinearExpr> u, v, w;  ///< row-major (g, h)
  milp::LinearExpr cost;                  ///< first-stage cost

  [[nodiscard]] const milp::LinearExpr& on(int g, int h) const { return u[g * hours + h]; }
  [[nodiscard]] const milp::LinearExpr& startup(int g, int h) const { return v[g * hours + h]; }
  [[nodiscard]] const milp::LinearExpr& shutdown(int g, int h) const { return w[g * hours + h]; }
};

/// Binary u/v/w columns with the logic, minimum up/down and initial-condition
/// constraints that define the feasible commitment set.
[[nodiscard]] CommitmentTerms build_first_stage(milp::ModelBuilder& model, const SystemModel& system);

[[nodiscard]] CommitmentTerms fixed_commitment(const SystemModel& system, const CommitmentSchedule& schedule);

/// Columns of one second-stage block.
struct SecondStageBlock {
  std::vector<std::vector<milp::Var>> segments;  ///< [g][k * H + h]
  std::vector<milp::Var> curtail;                ///< b * H + h, invalid when absent
  std::vector<milp::Var> overgen;                ///< b * H + h, invalid when absent
  std::vector<milp::LinearExpr> flow;            ///< line flow, l * H + h
  milp::LinearExpr cost;
};

/// Dispatch, ramping, balance and network constraints for net load `y` (B x H).
/// With `flow_limits` false the line limits are left for enforce_flow_limit.
[[nodiscard]] SecondStageBlock build_second_stage(milp::ModelBuilder& model, const SystemModel& system,
                                                  const CommitmentTerms& commitment, const Eigen::MatrixXd& y,
                                                  const std::string& tag, bool flow_limits = true);

/// Adds the +-flow_limit row of one line-hour of a block.
void enforce_flow_limit(milp::ModelBuilder& model, const SystemModel& system, const SecondStageBlock& block, int line,
                        int hour, const std::string& tag);

/// Reads a block back out of a solved model.
[[nodiscard]] DispatchSolution extract_dispatch(const SystemModel& system, const CommitmentTerms& commitment,
                                                const SecondStageBlock& block, const milp::SolveResult& result,
                                                const Eigen::MatrixXd& y);

/// eta^T z for a fixed schedule.
[[nodiscard]] double first_stage_cost(const SystemModel& system, const CommitmentSchedule& schedule);

/// Solves the second stage alone with the schedule fixed.
[[nodiscard]] DispatchSolution solve_second_stage(const SystemModel& system, const CommitmentSchedule& schedule,
                                                  const Eigen::MatrixXd& y,
                                                  const milp::SolveOptions& options = {});
[[nodiscard]] double second_stage_value(const SystemModel& system, const CommitmentSchedule& schedule,
                                        const Eigen::MatrixXd& y, const milp::SolveOptions& options = {});

/// Extensive-form weighted SAA: min eta^T z + sum_d w_d * second-stage cost_d.
/// Line limits are added lazily: the model is re-solved with every violated
/// line-hour enforced until the solution respects all of them.
[[nodiscard]] UcSolution solve_weighted_saa(const SystemModel& system, std::span<const Eigen::MatrixXd> scenarios,
                                            const Eigen::VectorXd& weights, const UcOptions& options = {});
/// Weighted SAA with equiprobable scenarios.
[[nodiscard]] UcSolution solve_nsuc(const SystemModel& system, std::span<const Eigen::MatrixXd> scenarios,
                                    const UcOptions& options = {});
/// Single-scenario UC; point forecast or realized net load.
[[nodiscard]] UcSolution solve_deterministic(const SystemModel& system, const Eigen::MatrixXd& y,
                                             const UcOptions& options = {});

[[nodiscard]] nlohmann::json to_json(const CommitmentSchedule& schedule);
[[nodiscard]] nlohmann::json to_json(const DispatchSolution& dispatch);
[[nodiscard]] nlohmann::json to_json(const UcSolution& solution);

}  // namespace ppuc
