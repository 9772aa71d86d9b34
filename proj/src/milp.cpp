#include "ppuc/milp.hpp"

#include <algorithm>

#include "ppuc/error.hpp"

namespace ppuc::milp {

LinearExpr& LinearExpr::add(const LinearExpr& other, double scale) {
  terms_.reserve(terms_.size() + other.terms_.size());
  for (const auto& [idx, coef] : other.terms_) {
    if (coef * scale != 0.0) terms_.emplace_back(idx, coef * scale);
  }
  constant_ += scale * other.constant_;
  return *this;
}

LinearExpr& LinearExpr::operator*=(double s) {
  for (auto& t : terms_) t.second *= s;
  constant_ *= s;
  return *this;
}

double LinearExpr::evaluate(const Eigen::VectorXd& values) const {
  double acc = constant_;
  for (const auto& [idx, coef] : terms_) acc += coef * values[idx];
  return acc;
}

LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }
LinearExpr operator*(double s, LinearExpr a) { return a *= s; }

void ModelBuilder::check_name(const std::string& name, bool column) {
  if (name.empty()) return;
  if (!names_.insert(name).second) {
    throw ValidationError(std::string("duplicate ") + (column ? "variable" : "constraint") + " name '" +
                          name + "'");
  }
}

Var ModelBuilder::add_variable(std::string name, double lb, double ub, VarType type, double objective) {
  if (lb > ub) throw ValidationError("variable '" + name + "' has lb > ub");
  check_name(name, true);
  col_lower_.push_back(lb);
  col_upper_.push_back(ub);
  col_cost_.push_back(objective);
  col_type_.push_back(type);
  col_names_.push_back(std::move(name));
  return Var{static_cast<int>(col_lower_.size() - 1)};
}

void ModelBuilder::add_range(const LinearExpr& expr, double lo, double hi, std::string name) {
  check_name(name, false);
  // Merge duplicate columns so each row holds a column at most once.
  std::vector<std::pair<int, double>> terms = expr.terms();
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const int n = static_cast<int>(num_variables());
  int last = -1;
  for (const auto& [idx, coef] : terms) {
    if (idx < 0 || idx >= n) {
      throw ValidationError("constraint '" + name + "' references an undeclared variable");
    }
    if (idx == last) {
      row_value_.back() += coef;
    } else {
      row_index_.push_back(idx);
      row_value_.push_back(coef);
      last = idx;
    }
  }
  row_start_.push_back(static_cast<int>(row_index_.size()));
  row_lower_.push_back(lo - expr.constant());
  row_upper_.push_back(hi - expr.constant());
  row_names_.push_back(std::move(name));
}

void ModelBuilder::add_constraint(const LinearExpr& expr, Sense sense, double rhs, std::string name) {
  switch (sense) {
    case Sense::LessEqual:
      add_range(expr, -kInf, rhs, std::move(name));
      break;
    case Sense::Equal:
      add_range(expr, rhs, rhs, std::move(name));
      break;
    case Sense::GreaterEqual:
      add_range(expr, rhs, kInf, std::move(name));
      break;
  }
}

void ModelBuilder::add_objective(const LinearExpr& expr, double scale) {
  const int n = static_cast<int>(num_variables());
  for (const auto& [idx, coef] : expr.terms()) {
    if (idx < 0 || idx >= n) throw ValidationError("objective references an undeclared variable");
    col_cost_[idx] += scale * coef;
  }
  objective_offset_ += scale * expr.constant();
}

void ModelBuilder::fix(Var v, double value) {
  col_lower_.at(v.index) = value;
  col_upper_.at(v.index) = value;
}

bool ModelBuilder::has_integers() const {
  return std::any_of(col_type_.begin(), col_type_.end(), [](VarType t) { return t == VarType::Binary; });
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::GapLimit:
      return "gap-limit";
    case SolveStatus::TimeLimit:
      return "time-limit";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::Error:
      return "error";
  }
  return "error";
}

}  // namespace ppuc::milp
