#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ppuc::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarType { Continuous, Binary };
enum class Sense { LessEqual, Equal, GreaterEqual };

/// Handle to a model column.
struct Var {
  int index = -1;
  [[nodiscard]] bool valid() const { return index >= 0; }
};

/// Sparse affine expression sum(coef * var) + constant.
class LinearExpr {
 public:
  LinearExpr() = default;
  LinearExpr(double constant) : constant_(constant) {}  // NOLINT(google-explicit-constructor)
  LinearExpr(Var v, double coef = 1.0) { add(v, coef); }  // NOLINT(google-explicit-constructor)

  LinearExpr& add(Var v, double coef) {
    if (coef != 0.0) terms_.emplace_back(v.index, coef);
    return *this;
  }
  LinearExpr& add(const LinearExpr& other, double scale = 1.0);
  LinearExpr& operator+=(const LinearExpr& other) { return add(other, 1.0); }
  LinearExpr& operator-=(const LinearExpr& other) { return add(other, -1.0); }
  LinearExpr& operator*=(double s);

  [[nodiscard]] double constant() const { return constant_; }
  [[nodiscard]] const std::vector<std::pair<int, double>>& terms() const { return terms_; }
  /// Evaluates the expression at a column-value vector.
  [[nodiscard]] double evaluate(const Eigen::VectorXd& values) const;

 private:
  std::vector<std::pair<int, double>> terms_;
  double constant_ = 0.0;
};

LinearExpr operator+(LinearExpr a, const LinearExpr& b);
LinearExpr operator-(LinearExpr a, const LinearExpr& b);
LinearExpr operator*(double s, LinearExpr a);

/// Backend-neutral minimization model. Rows are stored as ranges lo <= a.x <= hi.
class ModelBuilder {
 public:
  Var add_variable(std::string name, double lb, double ub, VarType type = VarType::Continuous,
                   double objective = 0.0);
  Var add_binary(std::string name, double objective = 0.0) {
    return add_variable(std::move(name), 0.0, 1.0, VarType::Binary, objective);
  }

  void add_constraint(const LinearExpr& expr, Sense sense, double rhs, std::string name);
  void add_range(const LinearExpr& expr, double lo, double hi, std::string name);
  /// Adds expr to the objective (minimize).
  void add_objective(const LinearExpr& expr, double scale = 1.0);

  /// Fixes both bounds of a column.
  void fix(Var v, double value);

  [[nodiscard]] std::size_t num_variables() const { return col_lower_.size(); }
  [[nodiscard]] std::size_t num_constraints() const { return row_lower_.size(); }
  [[nodiscard]] bool has_integers() const;

  // Raw accessors used by backend adapters.
  [[nodiscard]] const std::vector<double>& col_lower() const { return col_lower_; }
  [[nodiscard]] const std::vector<double>& col_upper() const { return col_upper_; }
  [[nodiscard]] const std::vector<double>& col_cost() const { return col_cost_; }
  [[nodiscard]] const std::vector<VarType>& col_type() const { return col_type_; }
  [[nodiscard]] const std::vector<std::string>& col_names() const { return col_names_; }
  [[nodiscard]] const std::vector<double>& row_lower() const { return row_lower_; }
  [[nodiscard]] const std::vector<double>& row_upper() const { return row_upper_; }
  [[nodiscard]] const std::vector<std::string>& row_names() const { return row_names_; }
  [[nodiscard]] const std::vector<int>& row_start() const { return row_start_; }
  [[nodiscard]] const std::vector<int>& row_index() const { return row_index_; }
  [[nodiscard]] const std::vector<double>& row_value() const { return row_value_; }
  [[nodiscard]] double objective_offset() const { return objective_offset_; }

 private:
  void check_name(const std::string& name, bool column);

  std::vector<double> col_lower_, col_upper_, col_cost_;
  std::vector<VarType> col_type_;
  std::vector<std::string> col_names_;
  std::vector<double> row_lower_, row_upper_;
  std::vector<std::string> row_names_;
  std::vector<int> row_start_{0};
  std::vector<int> row_index_;
  std::vector<double> row_value_;
  double objective_offset_ = 0.0;
  std::unordered_set<std::string> names_;
};

enum class SolveStatus { Optimal, GapLimit, TimeLimit, Infeasible, Error };

[[nodiscard]] const char* to_string(SolveStatus status);

struct SolveOptions {
  double mip_gap_tol = 1e-6;
  double time_limit = kInf;  ///< seconds
  bool verbose = false;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Error;
  double objective = 0.0;
  Eigen::VectorXd values;
  double mip_gap = 0.0;  ///< relative
  double wall_time = 0.0;
  std::string message;

  [[nodiscard]] bool has_solution() const { return values.size() > 0; }
  [[nodiscard]] double value(Var v) const { return values[v.index]; }
  [[nodiscard]] double value(const LinearExpr& e) const { return e.evaluate(values); }
};

/// Solves the model with the configured backend. Never throws for solver-side
/// failures; those are reported through status/message.
[[nodiscard]] SolveResult solve(const ModelBuilder& model, const SolveOptions& options = {});

/// Writes the model in CPLEX LP format.
void export_lp(const ModelBuilder& model, const std::filesystem::path& path);

}  // namespace ppuc::milp
