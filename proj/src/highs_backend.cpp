// HiGHS adapter: the only translation unit that knows about the backend.
#include <Highs.h>

#include <chrono>
#include <cmath>

#include "ppuc/error.hpp"
#include "ppuc/milp.hpp"

namespace ppuc::milp {

namespace {

HighsLp to_highs(const ModelBuilder& model) {
  HighsLp lp;
  lp.num_col_ = static_cast<HighsInt>(model.num_variables());
  lp.num_row_ = static_cast<HighsInt>(model.num_constraints());
  lp.sense_ = ObjSense::kMinimize;
  lp.offset_ = model.objective_offset();
  lp.col_cost_ = model.col_cost();
  lp.col_lower_ = model.col_lower();
  lp.col_upper_ = model.col_upper();
  lp.row_lower_ = model.row_lower();
  lp.row_upper_ = model.row_upper();
  lp.a_matrix_.format_ = MatrixFormat::kRowwise;
  lp.a_matrix_.num_col_ = lp.num_col_;
  lp.a_matrix_.num_row_ = lp.num_row_;
  lp.a_matrix_.start_.assign(model.row_start().begin(), model.row_start().end());
  lp.a_matrix_.index_.assign(model.row_index().begin(), model.row_index().end());
  lp.a_matrix_.value_ = model.row_value();
  if (model.has_integers()) {
    lp.integrality_.resize(model.num_variables());
    for (std::size_t j = 0; j < model.num_variables(); ++j) {
      lp.integrality_[j] =
          model.col_type()[j] == VarType::Binary ? HighsVarType::kInteger : HighsVarType::kContinuous;
    }
  }
  return lp;
}

void configure(Highs& highs, const SolveOptions& options) {
  highs.setOptionValue("output_flag", options.verbose);
  highs.setOptionValue("mip_rel_gap", options.mip_gap_tol);
  highs.setOptionValue("random_seed", 0);
  if (std::isfinite(options.time_limit)) highs.setOptionValue("time_limit", options.time_limit);
}

}  // namespace

SolveResult solve(const ModelBuilder& model, const SolveOptions& options) {
  SolveResult result;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  Highs highs;
  configure(highs, options);
  if (highs.passModel(to_highs(model)) == HighsStatus::kError) {
    result.message = "backend rejected the model";
    result.wall_time = elapsed();
    return result;
  }
  const HighsStatus run_status = highs.run();
  result.wall_time = elapsed();
  if (run_status == HighsStatus::kError) {
    result.message = "backend run failed: " + highs.modelStatusToString(highs.getModelStatus());
    return result;
  }

  const HighsModelStatus ms = highs.getModelStatus();
  const HighsInfo& info = highs.getInfo();
  const bool mip = model.has_integers();
  const bool has_primal = info.primal_solution_status == kSolutionStatusFeasible;

  switch (ms) {
    case HighsModelStatus::kOptimal:
      result.status = SolveStatus::Optimal;
      break;
    case HighsModelStatus::kTimeLimit:
    case HighsModelStatus::kIterationLimit:
    case HighsModelStatus::kSolutionLimit:
    case HighsModelStatus::kInterrupt:
      result.status = has_primal ? SolveStatus::TimeLimit : SolveStatus::Error;
      break;
    case HighsModelStatus::kInfeasible:
    case HighsModelStatus::kUnboundedOrInfeasible:
      result.status = SolveStatus::Infeasible;
      break;
    default:
      result.status = SolveStatus::Error;
      break;
  }
  result.message = highs.modelStatusToString(ms);

  if (result.status == SolveStatus::Optimal || result.status == SolveStatus::TimeLimit) {
    const HighsSolution& sol = highs.getSolution();
    result.values = Eigen::Map<const Eigen::VectorXd>(sol.col_value.data(),
                                                      static_cast<Eigen::Index>(sol.col_value.size()));
    result.objective = info.objective_function_value;
    result.mip_gap = mip ? std::max(0.0, info.mip_gap) : 0.0;
    if (!std::isfinite(result.mip_gap)) result.mip_gap = 0.0;
    if (result.status == SolveStatus::Optimal && result.mip_gap > options.mip_gap_tol) {
      result.status = SolveStatus::GapLimit;
    }
  }
  return result;
}

void export_lp(const ModelBuilder& model, const std::filesystem::path& path) {
  Highs highs;
  highs.setOptionValue("output_flag", false);
  HighsLp lp = to_highs(model);
  lp.col_names_ = model.col_names();
  lp.row_names_ = model.row_names();
  for (std::size_t j = 0; j < lp.col_names_.size(); ++j) {
    if (lp.col_names_[j].empty()) lp.col_names_[j] = "c" + std::to_string(j);
  }
  for (std::size_t i = 0; i < lp.row_names_.size(); ++i) {
    if (lp.row_names_[i].empty()) lp.row_names_[i] = "r" + std::to_string(i);
  }
  if (highs.passModel(std::move(lp)) == HighsStatus::kError) {
    throw SolverError("backend rejected the model for export");
  }
  if (highs.writeModel(path.string()) == HighsStatus::kError) {
    throw SolverError("cannot write model to '" + path.string() + "'");
  }
}

}  // namespace ppuc::milp
