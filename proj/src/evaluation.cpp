#include "ppuc/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ppuc/error.hpp"
#include "ppuc/parallel.hpp"
#include "ppuc/weights.hpp"

namespace ppuc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool uses_weights(Method m) { return m == Method::WCSUC || m == Method::EWCSUC; }

bool uses_forest(Method m) { return m == Method::WCSUC || m == Method::EWCSUC || m == Method::PFUC; }

}  // namespace

const char* to_string(Method method) {
  switch (method) {
    case Method::IUC:
      return "IUC";
    case Method::WCSUC:
      return "w-CSUC";
    case Method::EWCSUC:
      return "ew-CSUC";
    case Method::NSUC:
      return "NSUC";
    case Method::PFUC:
      return "PFUC";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  std::string t;
  for (char c : text) {
    if (c != '-' && c != '_') t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (t == "iuc") return Method::IUC;
  if (t == "wcsuc") return Method::WCSUC;
  if (t == "ewcsuc") return Method::EWCSUC;
  if (t == "nsuc") return Method::NSUC;
  if (t == "pfuc") return Method::PFUC;
  throw ParseError("unknown method '" + text + "' (expected IUC, w-CSUC, ew-CSUC, NSUC or PFUC)");
}

double MethodResult::mean_cost() const { return mean_of(costs); }

double MethodResult::stddev_cost() const {
  if (costs.size() < 2) return 0.0;
  const double m = mean_cost();
  double ss = 0.0;
  for (double c : costs) ss += (c - m) * (c - m);
  return std::sqrt(ss / static_cast<double>(costs.size() - 1));
}

double MethodResult::mue() const { return mean_of(unserved); }

const MethodResult& Benchmark::at(Method m) const {
  for (const auto& r : results) {
    if (r.method == m) return r;
  }
  throw ValidationError(std::string("benchmark has no results for ") + to_string(m));
}

Benchmark run_benchmark(const Sample& train, const Sample& test, const BenchmarkConfig& config,
                        const StudyContext& ctx) {
  if (ctx.system == nullptr) throw ValidationError("study context has no system");
  if (test.size() == 0) throw DataError("test sample is empty");
  if (train.size() == 0) throw DataError("training sample is empty");
  if (config.methods.empty()) throw ValidationError("no methods requested");
  const SystemModel& system = *ctx.system;
  const int D = train.size();
  const auto T = static_cast<std::size_t>(test.size());
  const auto B = static_cast<Eigen::Index>(system.num_buses());

  Benchmark bench;
  bench.days = test.dates;
  bench.results.resize(config.methods.size());
  bool need_forest = false;
  for (std::size_t k = 0; k < config.methods.size(); ++k) {
    auto& r = bench.results[k];
    r.method = config.methods[k];
    r.costs.assign(T, 0.0);
    r.unserved.assign(T, 0.0);
    r.scenarios.assign(T, 0);
    r.solve_seconds.assign(T, 0.0);
    need_forest = need_forest || uses_forest(r.method);
  }

  RandomForest forest_w, forest_ew;
  double fit_w = 0.0;
  double fit_ew = 0.0;
  if (need_forest) {
    auto start = Clock::now();
    forest_w = fit_for(ctx, config.wcsuc, train);
    fit_w = seconds_since(start);
    const bool same = config.ewcsuc.max_depth == config.wcsuc.max_depth && config.ewcsuc.mtry == config.wcsuc.mtry;
    start = Clock::now();
    if (!same) forest_ew = fit_for(ctx, config.ewcsuc, train);
    fit_ew = same ? fit_w : seconds_since(start);
  }
  const RandomForest& ew_forest = forest_ew.trees.empty() ? forest_w : forest_ew;

  // NSUC schedule is shared by all days.
  CommitmentSchedule nsuc_schedule;
  int nsuc_scenarios = 0;
  double nsuc_seconds = 0.0;
  for (Method m : config.methods) {
    if (m != Method::NSUC) continue;
    const auto start = Clock::now();
    const UcSolution sol = solve_nsuc(system, train.Y, ctx.uc);
    nsuc_seconds = seconds_since(start);
    nsuc_schedule = sol.schedule;
    nsuc_scenarios = static_cast<int>(sol.scenario_ids.size());
  }

  std::vector<std::vector<double>> weight_time(config.methods.size(), std::vector<double>(T, 0.0));
  parallel_for(T, ctx.jobs, [&](std::size_t i) {
    const Eigen::VectorXd x = test.X.row(static_cast<Eigen::Index>(i)).transpose();
    const Eigen::MatrixXd& actual = test.Y[i];
    // Identical weights give the identical SAA, so the solve is reused.
    struct Solved {
      Eigen::VectorXd weights;
      UcSolution solution;
      double seconds = 0.0;
    };
    std::vector<Solved> solved;
    for (std::size_t k = 0; k < config.methods.size(); ++k) {
      auto& r = bench.results[k];
      try {
        CommitmentSchedule schedule;
        auto start = Clock::now();
        switch (r.method) {
          case Method::IUC: {
            const UcSolution sol = solve_deterministic(system, actual, ctx.uc);
            schedule = sol.schedule;
            r.scenarios[i] = 1;
            break;
          }
          case Method::WCSUC:
          case Method::EWCSUC: {
            const bool transformed = r.method == Method::WCSUC;
            Eigen::VectorXd w = empirical_weights(transformed ? forest_w : ew_forest, x);
            if (transformed) w = transform_weights(w, D, config.wcsuc.xi(D));
            weight_time[k][i] = seconds_since(start);
            auto hit = std::find_if(solved.begin(), solved.end(), [&](const Solved& s) { return s.weights == w; });
            if (hit == solved.end()) {
              start = Clock::now();
              UcSolution sol = prescribe(ctx, train, w);
              solved.push_back({w, std::move(sol), seconds_since(start)});
              hit = std::prev(solved.end());
            }
            const Solved& done = *hit;
            schedule = done.solution.schedule;
            r.scenarios[i] = static_cast<int>(done.solution.scenario_ids.size());
            r.solve_seconds[i] = done.seconds;
            break;
          }
          case Method::NSUC:
            schedule = nsuc_schedule;
            r.scenarios[i] = nsuc_scenarios;
            break;
          case Method::PFUC: {
            const Eigen::MatrixXd forecast = unflatten_label(predict(forest_w, x), B);
            weight_time[k][i] = seconds_since(start);
            start = Clock::now();
            schedule = solve_deterministic(system, forecast, ctx.uc).schedule;
            r.scenarios[i] = 1;
            break;
          }
        }
        if (r.method == Method::NSUC) {
          r.solve_seconds[i] = nsuc_seconds;
        } else if (!uses_weights(r.method)) {
          r.solve_seconds[i] = seconds_since(start);
        }
        const DayOutcome outcome = realized_outcome(system, schedule, actual, ctx.uc.solver);
        r.costs[i] = outcome.cost;
        r.unserved[i] = outcome.unserved;
      } catch (const Error& e) {
        throw SolverError(std::string(to_string(r.method)) + " on test day " + format_date(test.dates[i]) + ": " +
                          e.what());
      }
    }
  });

  for (std::size_t k = 0; k < config.methods.size(); ++k) {
    auto& r = bench.results[k];
    const double fit = r.method == Method::EWCSUC ? fit_ew : (uses_forest(r.method) ? fit_w : 0.0);
    r.weight_seconds = fit + std::accumulate(weight_time[k].begin(), weight_time[k].end(), 0.0);
  }
  return bench;
}

std::vector<SweepRow> sweep_training_size(const Sample& train, const Sample& validation, const Sample& test,
                                          const HyperParams& base, const std::vector<double>& xi_factors,
                                          const std::vector<int>& sizes, const std::vector<Method>& methods,
                                          const StudyContext& ctx) {
  if (sizes.empty()) throw ValidationError("training-size sweep needs at least one D");
  for (int D : sizes) {
    if (D < 1 || D > train.size()) {
      throw DataError("sweep size D = " + std::to_string(D) + " outside [1, " + std::to_string(train.size()) + "]");
    }
  }
  GridSpec spec;
  spec.depths = {base.max_depth};
  spec.mtry = {base.mtry};
  spec.xi_factors = xi_factors;
  const auto grid = make_grid(spec);

  std::vector<SweepRow> rows;
  for (int D : sizes) {
    const Sample sub = head(train, D);
    const TuningResult tuned = tune(sub, validation, grid, ctx);
    SweepRow row;
    row.D = D;
    row.xi_factor = tuned.best_config().config.xi_factor;
    BenchmarkConfig cfg;
    cfg.wcsuc = tuned.best_config().config;
    cfg.ewcsuc = {base.max_depth, base.mtry, 1.0};
    cfg.methods = methods;
    row.benchmark = run_benchmark(sub, test, cfg, ctx);
    rows.push_back(std::move(row));
  }
  return rows;
}

double AblationRow::mean_weight_seconds() const { return mean_of(weight_seconds); }

double time_weight_evaluation(const Sample& train, const Sample& test, const HyperParams& config,
                              const StudyContext& ctx) {
  const auto start = Clock::now();
  const RandomForest forest = fit_for(ctx, config, train);
  const int D = train.size();
  double sink = 0.0;
  for (int i = 0; i < test.size(); ++i) {
    const Eigen::VectorXd w = transform_weights(empirical_weights(forest, test.X.row(i).transpose()), D, config.xi(D));
    sink += w[0];
  }
  const double elapsed = seconds_since(start);
  if (!std::isfinite(sink)) throw Error("non-finite weights during timing run");
  return elapsed;
}

std::vector<AblationRow> ablate_covariates(const Dataset& dataset, const std::vector<CovariateSet>& sets,
                                           const HyperParams& config, int runs, const StudyContext& ctx) {
  if (runs < 1) throw ValidationError("ablation needs at least one timing run");
  StudyContext serial = ctx;
  serial.jobs = 1;
  std::vector<AblationRow> rows;
  for (const auto& set : sets) {
    if (set.columns.empty()) throw ValidationError("covariate set '" + set.name + "' is empty");
    const Sample train = subset(dataset, dataset.train, set.columns);
    const Sample test = subset(dataset, dataset.test, set.columns);
    BenchmarkConfig cfg;
    cfg.wcsuc = config;
    cfg.ewcsuc = config;
    cfg.methods = {Method::WCSUC};
    const Benchmark bench = run_benchmark(train, test, cfg, ctx);
    AblationRow row;
    row.name = set.name;
    row.num_covariates = static_cast<int>(set.columns.size());
    row.mean_cost = bench.results.front().mean_cost();
    row.mue = bench.results.front().mue();
    rows.push_back(std::move(row));
  }
  for (int run = 0; run < runs; ++run) {
    for (std::size_t s = 0; s < sets.size(); ++s) {
      const Sample train = subset(dataset, dataset.train, sets[s].columns);
      const Sample test = subset(dataset, dataset.test, sets[s].columns);
      rows[s].weight_seconds.push_back(time_weight_evaluation(train, test, config, serial));
    }
  }
  return rows;
}

}  // namespace ppuc
