#include "ppuc/tuning.hpp"

#include <chrono>
#include <cmath>
#include <map>

#include "ppuc/error.hpp"
#include "ppuc/parallel.hpp"
#include "ppuc/weights.hpp"

namespace ppuc {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int mtry_rank(MtryRule rule) { return static_cast<int>(rule); }

}  // namespace

std::vector<HyperParams> make_grid(const GridSpec& spec) {
  std::vector<HyperParams> grid;
  for (int depth : spec.depths) {
    for (MtryRule rule : spec.mtry) {
      for (double xi : spec.xi_factors) {
        if (depth < 0) throw ValidationError("max depth must be nonnegative");
        if (!(xi > 0.0)) throw ValidationError("xi factors must be positive");
        grid.push_back({depth, rule, xi});
      }
    }
  }
  if (grid.empty()) throw ValidationError("hyperparameter grid is empty");
  return grid;
}

ForestParams forest_params(const StudyContext& ctx, const HyperParams& cfg, int num_features) {
  ForestParams p = ctx.forest;
  p.max_depth = cfg.max_depth;
  p.mtry = resolve_mtry(cfg.mtry, num_features);
  return p;
}

RandomForest fit_for(const StudyContext& ctx, const HyperParams& cfg, const Sample& train) {
  return fit_forest(train.X, label_matrix(train.Y), forest_params(ctx, cfg, static_cast<int>(train.X.cols())),
                    ctx.jobs);
}

DayOutcome realized_outcome(const SystemModel& system, const CommitmentSchedule& schedule, const Eigen::MatrixXd& y,
                            const milp::SolveOptions& options) {
  const DispatchSolution d = solve_second_stage(system, schedule, y, options);
  return {first_stage_cost(system, schedule) + d.cost, d.unserved_energy()};
}

UcSolution prescribe(const StudyContext& ctx, const Sample& train, const Eigen::VectorXd& weights) {
  return solve_weighted_saa(*ctx.system, train.Y, weights, ctx.uc);
}

ConfigResult evaluate_config(const HyperParams& cfg, const Sample& train, const Sample& validation,
                             const StudyContext& ctx) {
  return tune(train, validation, {cfg}, ctx).configs.front();
}

bool ranks_before(const ConfigResult& a, const ConfigResult& b) {
  if (a.total_cost != b.total_cost) return a.total_cost < b.total_cost;
  if (a.config.max_depth != b.config.max_depth) return a.config.max_depth < b.config.max_depth;
  if (a.mtry != b.mtry) return a.mtry < b.mtry;
  if (a.config.mtry != b.config.mtry) return mtry_rank(a.config.mtry) < mtry_rank(b.config.mtry);
  const double da = std::abs(std::log(a.config.xi_factor));
  const double db = std::abs(std::log(b.config.xi_factor));
  if (da != db) return da < db;
  return a.config.xi_factor < b.config.xi_factor;
}

TuningResult tune(const Sample& train, const Sample& validation, const std::vector<HyperParams>& grid,
                  const StudyContext& ctx) {
  if (grid.empty()) throw ValidationError("hyperparameter grid is empty");
  if (ctx.system == nullptr) throw ValidationError("study context has no system");
  if (validation.size() == 0) throw DataError("validation sample is empty");
  const int D = train.size();
  const auto d_x = static_cast<int>(train.X.cols());

  TuningResult result;
  result.configs.resize(grid.size());
  // One forest per (depth, mtry).
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  std::vector<std::pair<int, int>> group_order;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const std::pair<int, int> key{grid[c].max_depth, mtry_rank(grid[c].mtry)};
    if (!groups.count(key)) group_order.push_back(key);
    groups[key].push_back(c);
  }

  for (const auto& key : group_order) {
    const auto& members = groups[key];
    const HyperParams& first = grid[members.front()];
    const RandomForest forest = fit_for(ctx, first, train);
    std::vector<Eigen::VectorXd> raw(static_cast<std::size_t>(validation.size()));
    for (int i = 0; i < validation.size(); ++i) raw[static_cast<std::size_t>(i)] = empirical_weights(forest, validation.X.row(i).transpose());

    for (std::size_t c : members) {
      const auto start = std::chrono::steady_clock::now();
      ConfigResult& r = result.configs[c];
      r.config = grid[c];
      r.mtry = resolve_mtry(grid[c].mtry, d_x);
      r.day_costs.assign(static_cast<std::size_t>(validation.size()), 0.0);
      parallel_for(static_cast<std::size_t>(validation.size()), ctx.jobs, [&](std::size_t i) {
        try {
          const Eigen::VectorXd w = transform_weights(raw[i], D, grid[c].xi(D));
          const UcSolution sol = prescribe(ctx, train, w);
          r.day_costs[i] = realized_outcome(*ctx.system, sol.schedule, validation.Y[i], ctx.uc.solver).cost;
        } catch (const Error& e) {
          throw SolverError("validation day " + format_date(validation.dates[i]) + ": " + e.what());
        }
      });
      for (double v : r.day_costs) r.total_cost += v;
      r.wall_seconds = seconds_since(start);
    }
  }

  for (std::size_t c = 0; c < result.configs.size(); ++c) {
    const auto& r = result.configs[c];
    if (result.best < 0 || ranks_before(r, result.configs[static_cast<std::size_t>(result.best)])) {
      result.best = static_cast<int>(c);
    }
    if (r.config.xi_factor == 1.0 &&
        (result.best_identity < 0 || ranks_before(r, result.configs[static_cast<std::size_t>(result.best_identity)]))) {
      result.best_identity = static_cast<int>(c);
    }
  }
  return result;
}

nlohmann::json to_json(const HyperParams& cfg) {
  return {{"max_depth", cfg.max_depth}, {"mtry_rule", to_string(cfg.mtry)}, {"xi_factor", cfg.xi_factor}};
}

HyperParams hyperparams_from_json(const nlohmann::json& doc) {
  try {
    HyperParams cfg;
    cfg.max_depth = doc.at("max_depth").get<int>();
    cfg.mtry = parse_mtry_rule(doc.at("mtry_rule").get<std::string>());
    cfg.xi_factor = doc.at("xi_factor").get<double>();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed hyperparameter document: ") + e.what());
  }
}

}  // namespace ppuc
