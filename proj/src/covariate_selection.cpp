#include "ppuc/covariate_selection.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ppuc/error.hpp"

namespace ppuc {

double pcc(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) throw ValidationError("PCC inputs differ in length");
  if (x.size() < 2) throw ValidationError("PCC needs at least two observations");
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double sx = xc.squaredNorm();
  const double sy = yc.squaredNorm();
  if (sx <= 0.0 || sy <= 0.0) return 0.0;
  return std::clamp(xc.dot(yc) / std::sqrt(sx * sy), -1.0, 1.0);
}

Eigen::VectorXd max_abs_pcc(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets) {
  if (X.rows() != targets.rows()) throw ValidationError("covariates and targets differ in row count");
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (Eigen::Index t = 0; t < targets.cols(); ++t) {
      scores[j] = std::max(scores[j], std::abs(pcc(X.col(j), targets.col(t))));
    }
  }
  return scores;
}

PccFilterResult pcc_filter(const Eigen::VectorXd& scores, double threshold, const std::vector<bool>& bypass) {
  const auto d = static_cast<int>(scores.size());
  if (!bypass.empty() && static_cast<int>(bypass.size()) != d) throw ValidationError("bypass mask has wrong length");
  PccFilterResult out;
  bool any_scored = false;
  for (int j = 0; j < d; ++j) {
    const bool skip = !bypass.empty() && bypass[static_cast<std::size_t>(j)];
    const bool pass = scores[j] >= threshold && scores[j] > 0.0;
    if (pass && !skip) any_scored = true;
    if (skip || pass) out.kept.push_back(j);
  }
  if (!any_scored) {
    spdlog::warn("no covariate reached |PCC| >= {}; keeping the top 10% by |PCC|", threshold);
    out.fallback = true;
    std::vector<int> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
    const auto take = static_cast<std::size_t>(std::ceil(0.1 * d));
    out.kept.clear();
    for (std::size_t j = 0; j < order.size() && out.kept.size() < take; ++j) out.kept.push_back(order[j]);
    for (int j = 0; j < d; ++j) {
      if (!bypass.empty() && bypass[static_cast<std::size_t>(j)]) out.kept.push_back(j);
    }
    std::sort(out.kept.begin(), out.kept.end());
    out.kept.erase(std::unique(out.kept.begin(), out.kept.end()), out.kept.end());
  }
  return out;
}

RfeResult rfe(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const std::vector<int>& candidates,
              int target_count, const RfeOptions& options) {
  if (target_count < 1) throw ValidationError("RFE target count must be at least 1");
  if (target_count > static_cast<int>(candidates.size())) {
    throw ValidationError("RFE target count " + std::to_string(target_count) + " exceeds the " +
                          std::to_string(candidates.size()) + " candidate covariates");
  }
  if (!(options.step > 0.0)) throw ValidationError("RFE step must be positive");
  RfeResult out;
  std::vector<int> current = candidates;
  std::sort(current.begin(), current.end());
  while (static_cast<int>(current.size()) > target_count) {
    out.set_sizes.push_back(static_cast<int>(current.size()));
    const auto n = static_cast<int>(current.size());
    Eigen::MatrixXd sub(X.rows(), n);
    for (int c = 0; c < n; ++c) sub.col(c) = X.col(current[static_cast<std::size_t>(c)]);
    ForestParams params = options.forest;
    params.mtry = resolve_mtry(options.mtry, n);
    const RandomForest forest = fit_forest(sub, Y, params, options.jobs);
    const Eigen::VectorXd importance = feature_importance(forest).values;

    // Least important first; among equals, the higher column index goes first.
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (importance[a] != importance[b]) return importance[a] < importance[b];
      return current[static_cast<std::size_t>(a)] > current[static_cast<std::size_t>(b)];
    });
    const int drop = std::min(static_cast<int>(std::ceil(options.step * n - 1e-12)), n - target_count);
    std::vector<bool> removed(static_cast<std::size_t>(n), false);
    for (int k = 0; k < drop; ++k) {
      removed[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;
      out.eliminated.push_back(current[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
    }
    std::vector<int> next;
    for (int c = 0; c < n; ++c) {
      if (!removed[static_cast<std::size_t>(c)]) next.push_back(current[static_cast<std::size_t>(c)]);
    }
    current = std::move(next);
  }
  out.set_sizes.push_back(static_cast<int>(current.size()));
  out.final_set = std::move(current);
  return out;
}

SelectionReport select_covariates(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                  const Eigen::MatrixXd& hourly_targets, const std::vector<bool>& calendar_columns,
                                  std::vector<std::string> names, double threshold, int target_count,
                                  const RfeOptions& options) {
  SelectionReport report;
  report.covariate_names = std::move(names);
  report.threshold = threshold;
  report.pcc_values = max_abs_pcc(X, hourly_targets);
  const PccFilterResult filtered = pcc_filter(report.pcc_values, threshold, calendar_columns);
  report.kept_after_pcc = filtered.kept;
  report.pcc_fallback = filtered.fallback;
  const RfeResult r = rfe(X, Y, report.kept_after_pcc, target_count, options);
  report.rfe_eliminated = r.eliminated;
  report.final_set = r.final_set;
  return report;
}

nlohmann::json to_json(const SelectionReport& report) {
  return {{"covariate_names", report.covariate_names},
          {"pcc_values", std::vector<double>(report.pcc_values.data(), report.pcc_values.data() + report.pcc_values.size())},
          {"pcc_threshold", report.threshold},
          {"kept_after_pcc", report.kept_after_pcc},
          {"pcc_fallback", report.pcc_fallback},
          {"rfe_eliminated", report.rfe_eliminated},
          {"final_set", report.final_set},
          {"counts",
           {{"candidates", report.pcc_values.size()},
            {"after_pcc", report.kept_after_pcc.size()},
            {"final", report.final_set.size()}}}};
}

SelectionReport selection_from_json(const nlohmann::json& doc) {
  try {
    SelectionReport r;
    r.covariate_names = doc.at("covariate_names").get<std::vector<std::string>>();
    const auto values = doc.at("pcc_values").get<std::vector<double>>();
    r.pcc_values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    r.threshold = doc.at("pcc_threshold").get<double>();
    r.kept_after_pcc = doc.at("kept_after_pcc").get<std::vector<int>>();
    r.pcc_fallback = doc.at("pcc_fallback").get<bool>();
    r.rfe_eliminated = doc.at("rfe_eliminated").get<std::vector<int>>();
    r.final_set = doc.at("final_set").get<std::vector<int>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed selection report: ") + e.what());
  }
}

}  // namespace ppuc
