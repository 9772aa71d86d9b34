#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ppuc/error.hpp"
#include "ppuc/milp.hpp"

using namespace ppuc::milp;

TEST_CASE("continuous lower bound") {
  ModelBuilder m;
  const Var x = m.add_variable("x", -kInf, kInf, VarType::Continuous, 1.0);
  m.add_constraint(LinearExpr(x), Sense::GreaterEqual, 3.0, "c");
  const auto r = solve(m);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(3.0));
  CHECK(r.value(x) == doctest::Approx(3.0));
}

TEST_CASE("binary covering") {
  ModelBuilder m;
  const Var x = m.add_binary("x", 1.0);
  const Var y = m.add_binary("y", 1.0);
  m.add_constraint(LinearExpr(x) + LinearExpr(y), Sense::GreaterEqual, 1.0, "cover");
  CHECK(m.has_integers());
  const auto r = solve(m);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(1.0));
  CHECK(r.value(x) + r.value(y) == doctest::Approx(1.0));
}

TEST_CASE("infeasible pair") {
  ModelBuilder m;
  const Var x = m.add_variable("x", -kInf, kInf);
  m.add_constraint(LinearExpr(x), Sense::GreaterEqual, 1.0, "lo");
  m.add_constraint(LinearExpr(x), Sense::LessEqual, 0.0, "hi");
  CHECK(solve(m).status == SolveStatus::Infeasible);
}

TEST_CASE("objective constants and scaling") {
  ModelBuilder m;
  const Var x = m.add_variable("x", 0.0, 10.0);
  m.add_objective(LinearExpr(x, -2.0) + LinearExpr(5.0), 3.0);
  const auto r = solve(m);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(3.0 * (5.0 - 20.0)));
}

TEST_CASE("fixing a column") {
  ModelBuilder m;
  const Var x = m.add_binary("x", -1.0);
  m.fix(x, 0.0);
  const auto r = solve(m);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.value(x) == 0.0);
}

TEST_CASE("duplicate names are rejected") {
  ModelBuilder m;
  (void)m.add_variable("x", 0.0, 1.0);
  CHECK_THROWS_AS((void)m.add_variable("x", 0.0, 1.0), ppuc::Error);
  m.add_constraint(LinearExpr(1.0), Sense::LessEqual, 2.0, "c");
  CHECK_THROWS_AS(m.add_constraint(LinearExpr(1.0), Sense::LessEqual, 2.0, "c"), ppuc::Error);
}

TEST_CASE("expressions reference declared columns only") {
  ModelBuilder m;
  CHECK_THROWS_AS(m.add_constraint(LinearExpr(Var{3}), Sense::LessEqual, 1.0, "bad"), ppuc::Error);
}

TEST_CASE("linear expression arithmetic") {
  const Var a{0};
  const Var b{1};
  LinearExpr e = 2.0 * (LinearExpr(a) - LinearExpr(b, 3.0)) + LinearExpr(4.0);
  Eigen::VectorXd v(2);
  v << 1.0, 2.0;
  CHECK(e.evaluate(v) == doctest::Approx(2.0 * (1.0 - 6.0) + 4.0));
}

TEST_CASE("lp export") {
  ModelBuilder m;
  const Var x = m.add_variable("x", 0.0, 4.0, VarType::Continuous, 1.0);
  const Var y = m.add_binary("y", 2.0);
  m.add_constraint(LinearExpr(x) + LinearExpr(y), Sense::GreaterEqual, 1.0, "cover");
  const auto path = std::filesystem::temp_directory_path() / "ppuc_export_test.lp";
  export_lp(m, path);
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  CHECK(text.str().find("cover") != std::string::npos);
  CHECK(text.str().find("y") != std::string::npos);
  std::filesystem::remove(path);
}
