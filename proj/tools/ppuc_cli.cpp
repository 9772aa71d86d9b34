#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "ppuc/error.hpp"
#include "ppuc/pipeline.hpp"
#include "synth.hpp"

namespace {

struct Flags {
  ppuc::RunConfig config;
  std::string train = "2018-06-01..2019-05-31";
  std::string val = "2019-06-01..2019-06-30";
  std::string test = "2019-07-01..2019-08-31";
  std::vector<std::string> methods;
  std::vector<std::string> mtry;
  std::string select_mtry = "0.3";
};

void add_common(CLI::App* sub, Flags& f) {
  auto& c = f.config;
  sub->add_option("--system", c.system, "System description (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "Output directory for stage artifacts")->capture_default_str();
  sub->add_option("--seed", c.seed, "Global seed")->capture_default_str();
  sub->add_option("--jobs", c.jobs, "Concurrent fits/solves (0 = one per core)")->capture_default_str();
  sub->add_option("--trees", c.n_trees, "Trees per forest")->capture_default_str();
  sub->add_option("--min-leaf", c.min_leaf, "Minimum samples per leaf")->capture_default_str();
  sub->add_option("--mip-gap", c.mip_gap, "Relative MIP gap tolerance")->capture_default_str();
  sub->add_option("--time-limit", c.time_limit, "Per-solve time limit, seconds");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prescriptive stochastic unit commitment pipeline"};
  app.require_subcommand(1);
  Flags f;
  auto& c = f.config;

  auto* prep = app.add_subcommand("prep", "Ingest time series, build covariates, scale and split");
  add_common(prep, f);
  prep->add_option("--data", c.data, "Hourly time-series CSV")->required()->check(CLI::ExistingFile);
  prep->add_option("--holidays", c.holidays, "Holiday list, one ISO date per line")->check(CLI::ExistingFile);
  prep->add_option("--train-range", f.train, "Training dates A..B")->capture_default_str();
  prep->add_option("--val-range", f.val, "Validation dates A..B")->capture_default_str();
  prep->add_option("--test-range", f.test, "Test dates A..B")->capture_default_str();

  auto* select = app.add_subcommand("select", "PCC filter and recursive feature elimination");
  add_common(select, f);
  select->add_option("--pcc-threshold", c.pcc_threshold, "Minimum max-|PCC| to keep a covariate")
      ->capture_default_str();
  select->add_option("--target-features", c.target_features, "Covariates kept after RFE")->capture_default_str();
  select->add_option("--select-depth", c.select_depth, "Forest depth used for RFE")->capture_default_str();
  select->add_option("--select-mtry", f.select_mtry, "mtry rule used for RFE (sqrt, 0.3, 0.6)")
      ->capture_default_str();
  select->add_option("--rfe-step", c.rfe_step, "Fraction of covariates removed per RFE round")
      ->capture_default_str();

  for (auto* sub : {app.add_subcommand("tune", "Grid search on validation cost"),
                    app.add_subcommand("run", "Benchmark, training-size sweep and covariate ablation")}) {
    add_common(sub, f);
    sub->add_option("--depths", c.grid.depths, "Max-depth candidates")->delimiter(',');
    sub->add_option("--mtry", f.mtry, "mtry rules (sqrt, 0.3, 0.6)")->delimiter(',');
    sub->add_option("--xi", c.grid.xi_factors, "xi candidates as multiples of D")->delimiter(',');
  }
  auto* tune = app.get_subcommand("tune");
  auto* run = app.get_subcommand("run");
  run->add_option("--methods", f.methods, "Methods to score (IUC, w-CSUC, ew-CSUC, NSUC, PFUC)")->delimiter(',');
  run->add_option("--d-sweep", c.d_sweep, "Training sizes for the sweep study")->delimiter(',');
  run->add_option("--ablation-runs", c.ablation_runs, "Timing repetitions for the ablation study (0 skips it)")
      ->capture_default_str();

  std::string synth_start = "2018-05-01";
  std::string synth_end = "2019-08-31";
  std::string synth_data;
  std::string synth_holidays;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic hourly time series for a system");
  synth->add_option("--system", c.system, "System description (JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--data", synth_data, "CSV to write")->required();
  synth->add_option("--holidays", synth_holidays, "Holiday list to write");
  synth->add_option("--start", synth_start, "First day")->capture_default_str();
  synth->add_option("--end", synth_end, "Last day")->capture_default_str();
  synth->add_option("--seed", c.seed, "Generator seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    c.train_range = ppuc::DateRange::parse(f.train);
    c.val_range = ppuc::DateRange::parse(f.val);
    c.test_range = ppuc::DateRange::parse(f.test);
    c.select_mtry = ppuc::parse_mtry_rule(f.select_mtry);
    if (!f.mtry.empty()) {
      c.grid.mtry.clear();
      for (const auto& m : f.mtry) c.grid.mtry.push_back(ppuc::parse_mtry_rule(m));
    }
    if (!f.methods.empty()) {
      c.methods.clear();
      for (const auto& m : f.methods) c.methods.push_back(ppuc::parse_method(m));
    }

    std::string summary;
    if (*prep) {
      summary = ppuc::cmd_prep(c);
    } else if (*select) {
      summary = ppuc::cmd_select(c);
    } else if (*tune) {
      summary = ppuc::cmd_tune(c);
    } else if (*run) {
      summary = ppuc::cmd_run(c);
    } else if (*synth) {
      const auto system = ppuc::load_system(c.system);
      const auto first = ppuc::parse_date(synth_start);
      const auto last = ppuc::parse_date(synth_end);
      ppuc::synth::write_timeseries(system, first, last, c.seed, synth_data);
      if (!synth_holidays.empty()) ppuc::synth::write_holidays(first, last, synth_holidays);
      summary = "synth: wrote " + synth_data;
    }
    std::cout << summary << '\n';
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::cerr << "error: " << msg << '\n';
    return 1;
  }
  return 0;
}
