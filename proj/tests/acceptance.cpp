// Acceptance checks: one PASS or FAIL line per criterion.
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ppuc/covariate_selection.hpp"
#include "ppuc/pipeline.hpp"
#include "ppuc/weights.hpp"
#include "support.hpp"

using namespace ppuc;
using testing::data_path;
using testing::rel_close;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool ok, const std::string& what, double seconds, const std::string& detail = {}) {
  std::printf("%s %d %s [%.1fs]%s%s\n", ok ? "PASS" : "FAIL", id, what.c_str(), seconds, detail.empty() ? "" : " ",
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

/// Runs one criterion, turning exceptions into FAIL lines.
void criterion(int id, const std::string& what, double budget_s, const std::function<bool(std::string&)>& body) {
  const auto start = Clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double s = std::chrono::duration<double>(Clock::now() - start).count();
  if (ok && s > budget_s) {
    ok = false;
    detail += " over the " + format_number(budget_s, 0) + "s budget";
  }
  report(id, ok, what, s, detail);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

/// CSV text with every column whose header ends in "_s" removed.
std::string without_timing(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<bool> keep;
  std::ostringstream out;
  while (std::getline(in, line)) {
    const auto cells = split_csv_line(line);
    if (keep.empty()) {
      for (const auto& h : cells) keep.push_back(!(h.size() > 2 && h.compare(h.size() - 2, 2, "_s") == 0));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c < keep.size() && keep[c]) out << cells[c] << ',';
    }
    out << '\n';
  }
  return out.str();
}

RunConfig base_config(const fs::path& out) {
  RunConfig c;
  c.system = data_path("ieee14_5gen.json");
  c.data = data_path("synthetic_timeseries.csv");
  c.holidays = data_path("holidays.txt");
  c.out = out;
  c.ablation_runs = 0;
  return c;
}

void full_pipeline(const RunConfig& c) {
  fs::remove_all(c.out);
  for (const auto& line : {cmd_prep(c), cmd_select(c), cmd_tune(c), cmd_run(c)}) spdlog::info("{}", line);
}

const fs::path kWork = fs::temp_directory_path() / "ppuc_acceptance";

RunConfig benchmark_config() {
  RunConfig c = base_config(kWork / "benchmark");
  c.train_range = DateRange::parse("2019-04-12..2019-05-31");
  c.val_range = DateRange::parse("2019-06-03..2019-06-04");
  c.test_range = DateRange::parse("2019-07-01..2019-07-10");
  c.grid = {{6, 10}, {MtryRule::Sqrt}, {0.25, 1.0}};
  return c;
}

/// Per-day cost by method from benchmark_days.csv.
std::map<std::string, std::vector<double>> day_costs(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::vector<double>> out;
  while (std::getline(in, line)) {
    const auto cells = split_csv_line(line);
    out[cells.at(1)].push_back(std::stod(cells.at(2)));
  }
  return out;
}

std::map<std::string, double> mean_costs(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string line;
  std::getline(in, line);
  std::map<std::string, double> out;
  while (std::getline(in, line)) {
    const auto cells = split_csv_line(line);
    out[cells.at(0)] = std::stod(cells.at(2));
  }
  return out;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  fs::create_directories(kWork);

  criterion(1, "empirical weights match a brute-force recount on 100 random forests", 10.0, [](std::string& detail) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n01;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const int D = 2 + static_cast<int>(rng() % 29);
      const int d = 1 + static_cast<int>(rng() % 8);
      Eigen::MatrixXd X(D, d), Y(D, 2);
      for (int i = 0; i < D; ++i) {
        for (int j = 0; j < d; ++j) X(i, j) = n01(rng);
        Y(i, 0) = X(i, 0) + n01(rng);
        Y(i, 1) = n01(rng);
      }
      ForestParams p;
      p.n_trees = 1 + static_cast<int>(rng() % 10);
      p.max_depth = static_cast<int>(rng() % 7);
      p.mtry = 1 + static_cast<int>(rng() % static_cast<unsigned>(d));
      p.seed = rng();
      const auto forest = fit_forest(X, Y, p);
      for (int q = 0; q < 5; ++q) {
        Eigen::VectorXd x(d);
        for (int j = 0; j < d; ++j) x[j] = n01(rng);
        const Eigen::VectorXd diff = empirical_weights(forest, x) - testing::brute_force_weights(forest, X, x);
        worst = std::max(worst, diff.cwiseAbs().maxCoeff());
      }
    }
    detail = "max abs difference " + std::to_string(worst);
    return worst <= 1e-12;
  });

  criterion(2, "weight transform keeps order, moves entropy the right way, xi = D is the identity", 1.0,
            [](std::string& detail) {
              std::mt19937_64 rng(2);
              int bad = 0;
              for (int trial = 0; trial < 1000; ++trial) {
                const int D = 2 + static_cast<int>(rng() % 60);
                const auto w = testing::random_simplex(rng, D);
                const double xi = (std::uniform_real_distribution<double>(0.1, 10.0)(rng)) * D;
                const auto out = transform_weights(w, D, xi);
                for (int i = 0; i < D; ++i) {
                  for (int j = 0; j < D; ++j) {
                    if (w[i] < w[j] && !(out[i] <= out[j])) ++bad;
                  }
                }
                const double e = D / xi;
                if (e > 1.0 && testing::shannon(out) > testing::shannon(w) + 1e-12) ++bad;
                if (e < 1.0 && testing::shannon(out) < testing::shannon(w) - 1e-12) ++bad;
                if (!(transform_weights(w, D, static_cast<double>(D)) == w)) ++bad;
              }
              detail = std::to_string(bad) + " violations";
              return bad == 0;
            });

  criterion(3, "toy SAA, NSUC and deterministic objectives equal exhaustive enumeration", 30.0,
            [](std::string& detail) {
              const auto s = load_system(data_path("toy_2gen_3h.json"));
              auto row = [](double a, double b, double c) {
                Eigen::MatrixXd y(1, 3);
                y << a, b, c;
                return y;
              };
              const std::vector<Eigen::MatrixXd> scen{row(30, 80, 120), row(50, 100, 90), row(20, 60, 140)};
              UcOptions opt;
              opt.solver.mip_gap_tol = 1e-9;
              Eigen::VectorXd w(3);
              w << 0.2, 0.5, 0.3;
              const double saa = solve_weighted_saa(s, scen, w, opt).objective;
              const double nsuc = solve_nsuc(s, scen, opt).objective;
              const double det = solve_deterministic(s, scen[1], opt).objective;
              const double o_saa = testing::enumerate_optimum(s, scen, {0.2, 0.5, 0.3}).objective;
              const double o_nsuc = testing::enumerate_optimum(s, scen, {1.0 / 3, 1.0 / 3, 1.0 / 3}).objective;
              const double o_det = testing::enumerate_optimum(s, {scen[1]}, {1.0}).objective;
              detail = "saa " + format_number(saa, 4) + " vs " + format_number(o_saa, 4);
              return rel_close(saa, o_saa, 1e-6) && rel_close(nsuc, o_nsuc, 1e-6) && rel_close(det, o_det, 1e-6);
            });

  bool benchmark_ready = false;
  criterion(4, "IUC is the cheapest method on every test day (D = 50, 10 days)", 600.0, [&](std::string& detail) {
    const RunConfig c = benchmark_config();
    full_pipeline(c);
    benchmark_ready = true;
    const auto costs = day_costs(c.out / "benchmark_days.csv");
    const auto& iuc = costs.at("IUC");
    if (iuc.size() != 10 || costs.size() != 5) {
      detail = "unexpected benchmark shape";
      return false;
    }
    int violations = 0;
    for (const auto& [method, v] : costs) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (iuc[i] > v[i] * (1.0 + 1e-6) + 1e-4) ++violations;
      }
    }
    detail = std::to_string(violations) + " violations over 50 method-days";
    return violations == 0;
  });

  criterion(5, "ew-CSUC = w-CSUC at xi = D, uniform weights = NSUC, one scenario = deterministic", 300.0,
            [](std::string& detail) {
              bool ok = true;
              // Toy instance.
              const auto toy = load_system(data_path("toy_2gen_3h.json"));
              const auto data = testing::regimes(21, 8, 1);
              UcOptions opt;
              opt.solver.mip_gap_tol = 1e-9;
              ForestParams p;
              p.n_trees = 20;
              p.max_depth = 3;
              p.mtry = 1;
              const auto forest = fit_forest(data.train.X, label_matrix(data.train.Y), p);
              const Eigen::VectorXd raw = empirical_weights(forest, data.validation.X.row(0).transpose());
              const Eigen::VectorXd w = transform_weights(raw, 8, 8.0);
              ok = ok && w == raw;
              ok = ok && solve_weighted_saa(toy, data.train.Y, w, opt).objective ==
                             solve_weighted_saa(toy, data.train.Y, raw, opt).objective;
              ok = ok && rel_close(solve_weighted_saa(toy, data.train.Y, Eigen::VectorXd::Constant(8, 0.125), opt).objective,
                                   solve_nsuc(toy, data.train.Y, opt).objective, 1e-6);
              ok = ok && rel_close(solve_weighted_saa(toy, std::span(data.train.Y.data(), 1), Eigen::VectorXd::Ones(1), opt).objective,
                                   solve_deterministic(toy, data.train.Y[0], opt).objective, 1e-6);
              const bool toy_ok = ok;

              // Synthetic instance, first days of the bundled series.
              const auto grid = load_system(data_path("ieee14_5gen.json"));
              const auto table = ingest_timeseries(data_path("synthetic_timeseries.csv"), grid);
              const Dataset ds = scale_net_load(build_covariates(table, {}), grid);
              const Sample days = subset(ds, {0, 1, 2, 3});
              const UcOptions def;
              const double gap = def.solver.mip_gap_tol;
              ForestParams q;
              q.n_trees = 20;
              q.max_depth = 2;
              q.mtry = 5;
              const auto f2 = fit_forest(days.X, label_matrix(days.Y), q);
              const Eigen::VectorXd raw2 = empirical_weights(f2, ds.X.row(10).transpose());
              ok = ok && transform_weights(raw2, 4, 4.0) == raw2;
              ok = ok && rel_close(solve_weighted_saa(grid, days.Y, Eigen::VectorXd::Constant(4, 0.25), def).objective,
                                   solve_nsuc(grid, days.Y, def).objective, 2 * gap);
              ok = ok && rel_close(solve_weighted_saa(grid, std::span(days.Y.data(), 1), Eigen::VectorXd::Ones(1), def).objective,
                                   solve_deterministic(grid, days.Y[0], def).objective, 2 * gap);
              detail = toy_ok ? (ok ? "toy and synthetic agree" : "synthetic mismatch") : "toy mismatch";
              return ok;
            });

  criterion(6, "second-stage arithmetic: 24,000; 24 x 502,000; 24 x 500,000", 10.0, [](std::string& detail) {
    const auto warm = load_system(data_path("single_unit_warm.json"));
    const auto cold = load_system(data_path("single_unit_cold.json"));
    const auto on = CommitmentSchedule::from_status(warm, Eigen::MatrixXi::Ones(1, warm.horizon));
    const double a = second_stage_value(warm, on, testing::flat_load(warm, 50.0));
    const double b = second_stage_value(warm, on, testing::flat_load(warm, 150.0));
    const double c = second_stage_value(cold, CommitmentSchedule::all_off(cold), testing::flat_load(cold, 50.0));
    detail = format_number(a, 2) + ", " + format_number(b, 2) + ", " + format_number(c, 2);
    return rel_close(a, 24000.0, 1e-6) && rel_close(b, 24.0 * 502000.0, 1e-6) && rel_close(c, 24.0 * 500000.0, 1e-6);
  });

  criterion(7, "two seeded end-to-end runs give identical reports apart from timing", 900.0, [](std::string& detail) {
    std::vector<fs::path> dirs{kWork / "repeat_a", kWork / "repeat_b"};
    for (const auto& dir : dirs) {
      RunConfig c = base_config(dir);
      c.train_range = DateRange::parse("2019-05-12..2019-05-31");
      c.val_range = DateRange::parse("2019-06-03..2019-06-04");
      c.test_range = DateRange::parse("2019-07-01..2019-07-03");
      c.n_trees = 30;
      c.target_features = 10;
      c.grid = {{3, 6}, {MtryRule::Sqrt}, {0.25, 1.0}};
      c.seed = 2024;
      full_pipeline(c);
    }
    std::vector<std::string> differing;
    for (const char* name : {"dataset.json", "prep_summary.json", "selection.json", "best_config.json", "forest.json"}) {
      if (slurp(dirs[0] / name) != slurp(dirs[1] / name)) differing.emplace_back(name);
    }
    for (const char* name : {"tuning.csv", "benchmark.csv", "benchmark_days.csv"}) {
      if (without_timing(slurp(dirs[0] / name)) != without_timing(slurp(dirs[1] / name))) differing.emplace_back(name);
    }
    detail = differing.empty() ? "9 artifacts compared" : "differs: " + differing.front();
    return differing.empty();
  });

  criterion(8, "IUC has the lowest mean cost; w-CSUC vs NSUC reported", 5.0, [&](std::string& detail) {
    if (!benchmark_ready) {
      detail = "benchmark from criterion 4 unavailable";
      return false;
    }
    const auto means = mean_costs(benchmark_config().out / "benchmark.csv");
    bool iuc_min = true;
    for (const auto& [m, v] : means) iuc_min = iuc_min && means.at("IUC") <= v * (1.0 + 1e-6) + 1e-4;
    const double w = means.at("w-CSUC");
    const double n = means.at("NSUC");
    detail = "w-CSUC " + format_number(w, 1) + ", NSUC " + format_number(n, 1);
    if (w > n) {
      detail += " (warning: w-CSUC above NSUC on this instance)";
      spdlog::warn("w-CSUC mean cost exceeds NSUC on the bundled study");
    }
    return iuc_min;
  });

  criterion(9, "PCC filter + RFE recover 3 signal covariates in at least 95 of 100 seeds", 300.0,
            [](std::string& detail) {
              int hits = 0;
              for (std::uint64_t seed = 0; seed < 100; ++seed) {
                const auto data = testing::signal_noise(1000 + seed);
                RfeOptions opt;
                opt.forest.n_trees = 50;
                opt.forest.max_depth = 6;
                opt.forest.seed = seed;
                const auto scores = max_abs_pcc(data.X, data.targets);
                const auto kept = pcc_filter(scores, 0.6);
                if (static_cast<int>(kept.kept.size()) < 3) continue;
                if (rfe(data.X, data.targets, kept.kept, 3, opt).final_set == data.signal) ++hits;
              }
              detail = std::to_string(hits) + "/100";
              return hits >= 95;
            });

  criterion(10, "weight evaluation is faster on the selected covariates than on all candidates", 600.0,
            [&](std::string& detail) {
              if (!benchmark_ready) {
                detail = "benchmark from criterion 4 unavailable";
                return false;
              }
              const RunConfig c = benchmark_config();
              const auto system = load_system(c.system);
              const Dataset ds = load_dataset(c.out / "dataset.json");
              const auto selection = selection_from_json(nlohmann::json::parse(slurp(c.out / "selection.json")));
              const auto best = nlohmann::json::parse(slurp(c.out / "best_config.json"));
              const HyperParams cfg = hyperparams_from_json(best.at("w_csuc"));
              StudyContext ctx = study_context(c, system);
              ctx.jobs = 1;
              const Sample train_r = subset(ds, ds.train), test_r = subset(ds, ds.test);
              const Sample train_f = subset(ds, ds.train, selection.final_set);
              const Sample test_f = subset(ds, ds.test, selection.final_set);
              double full = 0.0, reduced = 0.0;
              for (int run = 0; run < 30; ++run) {
                full += time_weight_evaluation(train_r, test_r, cfg, ctx);
                reduced += time_weight_evaluation(train_f, test_f, cfg, ctx);
              }
              detail = "mean " + format_number(full / 30 * 1e3, 2) + " ms with " +
                       std::to_string(ds.num_covariates()) + " covariates, " + format_number(reduced / 30 * 1e3, 2) +
                       " ms with " + std::to_string(selection.final_set.size());
              return reduced < full;
            });

  std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
