#include "ppuc/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ppuc/covariate_selection.hpp"
#include "ppuc/error.hpp"
#include "ppuc/forest.hpp"

namespace ppuc {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

nlohmann::json read_json(const fs::path& path, const char* hint) {
  std::ifstream in(path);
  if (!in) throw DataError("missing '" + path.string() + "' (run `" + hint + "` first)");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

Dataset read_dataset(const RunConfig& config) {
  if (!fs::exists(config.out / "dataset.json")) {
    throw DataError("missing '" + (config.out / "dataset.json").string() + "' (run `prep` first)");
  }
  return load_dataset(config.out / "dataset.json");
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<std::size_t> by_mean_cost(const Benchmark& bench) {
  std::vector<std::size_t> order(bench.results.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return bench.results[a].mean_cost() < bench.results[b].mean_cost();
  });
  return order;
}

std::string benchmark_csv(const Benchmark& bench) {
  std::ostringstream out;
  out << "method,days,mean_cost,std_cost,mue_mwh,mean_scenarios,weight_s,solve_s\n";
  for (std::size_t k : by_mean_cost(bench)) {
    const auto& r = bench.results[k];
    double scen = 0.0;
    for (int s : r.scenarios) scen += s;
    scen /= static_cast<double>(std::max<std::size_t>(1, r.scenarios.size()));
    out << to_string(r.method) << ',' << r.costs.size() << ',' << format_number(r.mean_cost()) << ','
        << format_number(r.stddev_cost()) << ',' << format_number(r.mue()) << ',' << format_number(scen, 2) << ','
        << format_number(r.weight_seconds, 4) << ',' << format_number(mean(r.solve_seconds), 4) << '\n';
  }
  return out.str();
}

std::string benchmark_days_csv(const Benchmark& bench) {
  std::ostringstream out;
  out << "date,method,cost,unserved_mwh,scenarios,solve_s\n";
  for (std::size_t i = 0; i < bench.days.size(); ++i) {
    for (const auto& r : bench.results) {
      out << format_date(bench.days[i]) << ',' << to_string(r.method) << ',' << format_number(r.costs[i]) << ','
          << format_number(r.unserved[i]) << ',' << r.scenarios[i] << ',' << format_number(r.solve_seconds[i], 4)
          << '\n';
    }
  }
  return out.str();
}

}  // namespace

std::string format_number(double value, int decimals) {
  if (value == 0.0) value = 0.0;  // drop negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::uint64_t stage_seed(const RunConfig& config, int stage) { return config.seed + static_cast<std::uint64_t>(stage); }

StudyContext study_context(const RunConfig& config, const SystemModel& system) {
  StudyContext ctx;
  ctx.system = &system;
  ctx.forest.n_trees = config.n_trees;
  ctx.forest.min_leaf = config.min_leaf;
  ctx.forest.seed = stage_seed(config, 2);
  ctx.uc.solver.mip_gap_tol = config.mip_gap;
  ctx.uc.solver.time_limit = config.time_limit;
  ctx.jobs = config.jobs;
  return ctx;
}

std::string cmd_prep(const RunConfig& config) {
  const SystemModel system = load_system(config.system);
  const HourlyTable table = ingest_timeseries(config.data, system);
  const std::vector<Date> holidays = config.holidays.empty() ? std::vector<Date>{} : load_holidays(config.holidays);
  Dataset ds = scale_net_load(build_covariates(table, holidays), system);
  split(ds, config.train_range, config.val_range, config.test_range);

  fs::create_directories(config.out);
  save_dataset(ds, config.out / "dataset.json");
  const nlohmann::json summary = {{"system", system.name},
                                  {"first_day", format_date(ds.dates.front())},
                                  {"last_day", format_date(ds.dates.back())},
                                  {"observations", ds.size()},
                                  {"D", ds.train.size()},
                                  {"D_validation", ds.validation.size()},
                                  {"test", ds.test.size()},
                                  {"d_x", ds.num_covariates()},
                                  {"scale", ds.scale}};
  write_text(config.out / "prep_summary.json", summary.dump(2) + "\n");
  return "prep: D=" + std::to_string(ds.train.size()) + " validation=" + std::to_string(ds.validation.size()) +
         " test=" + std::to_string(ds.test.size()) + " d_x=" + std::to_string(ds.num_covariates());
}

std::string cmd_select(const RunConfig& config) {
  const Dataset ds = read_dataset(config);
  const Sample train = subset(ds, ds.train);
  RfeOptions options;
  options.forest.n_trees = config.n_trees;
  options.forest.min_leaf = config.min_leaf;
  options.forest.max_depth = config.select_depth;
  options.forest.seed = stage_seed(config, 1);
  options.mtry = config.select_mtry;
  options.step = config.rfe_step;
  options.jobs = config.jobs;
  const SelectionReport report =
      select_covariates(train.X, label_matrix(train.Y), system_hourly(train.Y), ds.calendar_columns,
                        ds.covariate_names, config.pcc_threshold, config.target_features, options);
  write_text(config.out / "selection.json", to_json(report).dump(2) + "\n");
  const auto d = static_cast<std::size_t>(ds.num_covariates());
  return "select: candidates=" + std::to_string(d) + " kept_after_pcc=" + std::to_string(report.kept_after_pcc.size()) +
         " (dropped " + std::to_string(d - report.kept_after_pcc.size()) + ") final=" +
         std::to_string(report.final_set.size()) + " (dropped " +
         std::to_string(report.kept_after_pcc.size() - report.final_set.size()) + ")";
}

std::string cmd_tune(const RunConfig& config) {
  const SystemModel system = load_system(config.system);
  const Dataset ds = read_dataset(config);
  const SelectionReport selection = selection_from_json(read_json(config.out / "selection.json", "select"));
  const Sample train = subset(ds, ds.train, selection.final_set);
  const Sample validation = subset(ds, ds.validation, selection.final_set);
  const StudyContext ctx = study_context(config, system);
  const auto grid = make_grid(config.grid);
  const TuningResult result = tune(train, validation, grid, ctx);

  const int D = train.size();
  std::ostringstream csv;
  csv << "config,max_depth,mtry_rule,mtry,xi_factor,xi,total_cost,eval_s\n";
  for (std::size_t c = 0; c < result.configs.size(); ++c) {
    const auto& r = result.configs[c];
    csv << c << ',' << r.config.max_depth << ',' << to_string(r.config.mtry) << ',' << r.mtry << ','
        << format_number(r.config.xi_factor, 4) << ',' << format_number(r.config.xi(D), 4) << ','
        << format_number(r.total_cost) << ',' << format_number(r.wall_seconds, 4) << '\n';
  }
  write_text(config.out / "tuning.csv", csv.str());

  const auto& best = result.best_config();
  HyperParams ew = best.config;
  ew.xi_factor = 1.0;
  if (result.best_identity >= 0) ew = result.configs[static_cast<std::size_t>(result.best_identity)].config;
  const nlohmann::json doc = {{"w_csuc", to_json(best.config)},
                              {"ew_csuc", to_json(ew)},
                              {"D", D},
                              {"validation_days", validation.size()},
                              {"total_validation_cost", best.total_cost},
                              {"covariates", selection.final_set}};
  write_text(config.out / "best_config.json", doc.dump(2) + "\n");
  return "tune: " + std::to_string(result.configs.size()) + " configs, best depth=" +
         std::to_string(best.config.max_depth) + " mtry=" + to_string(best.config.mtry) +
         " xi=" + format_number(best.config.xi_factor, 2) + "D total=" + format_number(best.total_cost, 2);
}

std::string cmd_run(const RunConfig& config) {
  const SystemModel system = load_system(config.system);
  const Dataset ds = read_dataset(config);
  const nlohmann::json best = read_json(config.out / "best_config.json", "tune");
  const auto columns = best.at("covariates").get<std::vector<int>>();
  const Sample train = subset(ds, ds.train, columns);
  const Sample validation = subset(ds, ds.validation, columns);
  const Sample test = subset(ds, ds.test, columns);
  const StudyContext ctx = study_context(config, system);

  BenchmarkConfig bcfg;
  bcfg.wcsuc = hyperparams_from_json(best.at("w_csuc"));
  bcfg.ewcsuc = hyperparams_from_json(best.at("ew_csuc"));
  bcfg.methods = config.methods;
  const Benchmark bench = run_benchmark(train, test, bcfg, ctx);
  write_text(config.out / "benchmark.csv", benchmark_csv(bench));
  write_text(config.out / "benchmark_days.csv", benchmark_days_csv(bench));
  save_forest(fit_for(ctx, bcfg.wcsuc, train), config.out / "forest.json");

  std::string summary = "run: benchmark over " + std::to_string(test.size()) + " test days";
  const auto has = [&](Method m) { return std::find(bcfg.methods.begin(), bcfg.methods.end(), m) != bcfg.methods.end(); };
  if (has(Method::WCSUC) && has(Method::NSUC) &&
      bench.at(Method::WCSUC).mean_cost() > bench.at(Method::NSUC).mean_cost()) {
    spdlog::warn("w-CSUC mean cost {:.2f} exceeds NSUC mean cost {:.2f} on this instance",
                 bench.at(Method::WCSUC).mean_cost(), bench.at(Method::NSUC).mean_cost());
  }

  if (!config.d_sweep.empty()) {
    const auto rows = sweep_training_size(train, validation, test, bcfg.wcsuc, config.grid.xi_factors,
                                          config.d_sweep, bcfg.methods, ctx);
    std::ostringstream csv;
    csv << "D,method,xi_factor,xi,mean_cost,std_cost,std_cost_div10,mue_mwh,solve_mean_s,solve_median_s\n";
    for (const auto& row : rows) {
      for (const auto& r : row.benchmark.results) {
        csv << row.D << ',' << to_string(r.method) << ',' << format_number(row.xi_factor, 4) << ','
            << format_number(row.xi_factor * row.D, 4) << ',' << format_number(r.mean_cost()) << ','
            << format_number(r.stddev_cost()) << ',' << format_number(r.stddev_cost() / 10.0) << ','
            << format_number(r.mue()) << ',' << format_number(mean(r.solve_seconds), 4) << ','
            << format_number(median(r.solve_seconds), 4) << '\n';
      }
    }
    write_text(config.out / "sweep.csv", csv.str());
    summary += ", sweep over " + std::to_string(rows.size()) + " sizes";
  }

  if (config.ablation_runs > 0) {
    const SelectionReport selection = selection_from_json(read_json(config.out / "selection.json", "select"));
    std::vector<int> all(static_cast<std::size_t>(ds.num_covariates()));
    for (std::size_t c = 0; c < all.size(); ++c) all[c] = static_cast<int>(c);
    const std::vector<CovariateSet> sets = {
        {"X_r", all}, {"X_p", selection.kept_after_pcc}, {"X_f", selection.final_set}};
    const auto rows = ablate_covariates(ds, sets, bcfg.wcsuc, config.ablation_runs, ctx);
    std::ostringstream csv;
    csv << "set,covariates,mean_cost,mue_mwh,runs,weight_mean_s,weight_std_s\n";
    for (const auto& r : rows) {
      csv << r.name << ',' << r.num_covariates << ',' << format_number(r.mean_cost) << ',' << format_number(r.mue)
          << ',' << r.weight_seconds.size() << ',' << format_number(r.mean_weight_seconds(), 6) << ','
          << format_number(stddev(r.weight_seconds), 6) << '\n';
    }
    write_text(config.out / "ablation.csv", csv.str());
    summary += ", ablation over " + std::to_string(rows.size()) + " covariate sets";
  }
  return summary;
}

}  // namespace ppuc
