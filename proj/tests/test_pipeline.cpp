#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ppuc/covariate_selection.hpp"
#include "ppuc/error.hpp"
#include "ppuc/pipeline.hpp"
#include "support.hpp"

using namespace ppuc;
using testing::data_path;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int count_lines(const std::string& text) { return static_cast<int>(std::count(text.begin(), text.end(), '\n')); }

RunConfig small_config(const std::string& name) {
  RunConfig c;
  c.system = data_path("ieee14_5gen.json");
  c.data = data_path("synthetic_timeseries.csv");
  c.holidays = data_path("holidays.txt");
  c.out = fs::temp_directory_path() / name;
  fs::remove_all(c.out);
  c.train_range = DateRange::parse("2018-07-02..2018-08-20");
  c.val_range = DateRange::parse("2019-06-03..2019-06-03");
  c.test_range = DateRange::parse("2019-07-01..2019-07-01");
  c.n_trees = 20;
  c.target_features = 10;
  c.grid = {{6}, {MtryRule::Sqrt}, {1.0}};
  c.ablation_runs = 0;
  return c;
}

struct CliResult {
  int status = 0;
  std::string err;
};

CliResult cli(const std::string& args) {
  const fs::path err = fs::temp_directory_path() / "ppuc_cli_stderr.txt";
  const std::string cmd = std::string(PPUC_CLI) + " " + args + " >/dev/null 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  return {raw, slurp(err)};
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_number(1.5) == "1.500000");
  CHECK(format_number(-0.0) == "0.000000");
  CHECK(format_number(2.0 / 3.0, 2) == "0.67");
  CHECK(format_number(123456.789, 0) == "123457");
}

TEST_CASE("stage seeds differ and derive from the global seed") {
  RunConfig c;
  c.seed = 7;
  CHECK(stage_seed(c, 1) != stage_seed(c, 2));
  RunConfig d = c;
  d.seed = 8;
  CHECK(stage_seed(c, 1) != stage_seed(d, 1));
}

TEST_CASE("prep on the bundled data") {
  RunConfig c = small_config("ppuc_prep");
  c.train_range = DateRange::parse("2018-06-01..2019-05-31");
  c.val_range = DateRange::parse("2019-06-01..2019-06-30");
  c.test_range = DateRange::parse("2019-07-01..2019-08-31");
  CHECK(cmd_prep(c) == "prep: D=365 validation=30 test=62 d_x=172");
  const auto first = slurp(c.out / "dataset.json");
  (void)cmd_prep(c);
  CHECK(slurp(c.out / "dataset.json") == first);
  const auto summary = nlohmann::json::parse(slurp(c.out / "prep_summary.json"));
  CHECK(summary.at("D") == 365);
  CHECK(summary.at("scale").get<double>() == doctest::Approx(0.014579695748041918).epsilon(1e-12));
  fs::remove_all(c.out);
}

TEST_CASE("select reports the configured size and threshold 0 keeps every informative column") {
  RunConfig c = small_config("ppuc_select");
  (void)cmd_prep(c);
  (void)cmd_select(c);
  const auto report = selection_from_json(nlohmann::json::parse(slurp(c.out / "selection.json")));
  CHECK(report.final_set.size() == 10);

  const Dataset ds = load_dataset(c.out / "dataset.json");
  const Sample train = subset(ds, ds.train);
  int expected = 0;
  for (int j = 0; j < ds.num_covariates(); ++j) {
    const bool constant = (train.X.col(j).array() == train.X(0, j)).all();
    if (!constant || ds.calendar_columns[static_cast<std::size_t>(j)]) ++expected;
  }
  c.pcc_threshold = 0.0;
  c.target_features = 1;
  (void)cmd_select(c);
  const auto all = selection_from_json(nlohmann::json::parse(slurp(c.out / "selection.json")));
  CHECK(static_cast<int>(all.kept_after_pcc.size()) == expected);

  c.pcc_threshold = 0.6;
  c.target_features = 500;
  CHECK_THROWS_AS((void)cmd_select(c), ValidationError);
  fs::remove_all(c.out);
}

TEST_CASE("stages need their inputs") {
  RunConfig c = small_config("ppuc_missing");
  CHECK_THROWS_AS((void)cmd_select(c), DataError);
  CHECK_THROWS_AS((void)cmd_tune(c), DataError);
}

TEST_CASE("IUC-only run with a two-size sweep") {
  RunConfig c = small_config("ppuc_run");
  (void)cmd_prep(c);
  (void)cmd_select(c);
  (void)cmd_tune(c);
  CHECK(count_lines(slurp(c.out / "tuning.csv")) == 2);
  c.methods = {Method::IUC};
  c.d_sweep = {10, 50};
  (void)cmd_run(c);
  const auto bench = slurp(c.out / "benchmark.csv");
  CHECK(count_lines(bench) == 2);
  CHECK(bench.find("\nIUC,1,") != std::string::npos);
  const auto sweep = slurp(c.out / "sweep.csv");
  CHECK(count_lines(sweep) == 3);
  CHECK(sweep.find("\n10,IUC,") != std::string::npos);
  CHECK(sweep.find("\n50,IUC,") != std::string::npos);
  CHECK(fs::exists(c.out / "forest.json"));
  fs::remove_all(c.out);
}

TEST_CASE("command line errors exit nonzero with one line") {
  const auto missing = fs::temp_directory_path() / "no_such_series.csv";
  const auto a = cli("prep --system " + data_path("ieee14_5gen.json").string() + " --data " + missing.string());
  CHECK(a.status != 0);
  CHECK(a.err.find("no_such_series.csv") != std::string::npos);

  const auto b = cli("prep --system " + data_path("ieee14_5gen.json").string() + " --data " +
                     data_path("synthetic_timeseries.csv").string() + " --train-range 2019-01-01..2018-01-01 --out " +
                     (fs::temp_directory_path() / "ppuc_cli_bad").string());
  CHECK(b.status != 0);
  CHECK(b.err.rfind("error: ", 0) == 0);
  CHECK(count_lines(b.err) == 1);

  CHECK(cli("frobnicate").status != 0);
}
