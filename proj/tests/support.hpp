#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ppuc/dataset.hpp"
#include "ppuc/error.hpp"
#include "ppuc/forest.hpp"
#include "ppuc/scuc.hpp"
#include "ppuc/system_model.hpp"

namespace testing {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(PPUC_DATA_DIR) / name; }

inline bool rel_close(double a, double b, double rel, double abs_tol = 1e-9) {
  return std::abs(a - b) <= std::max(abs_tol, rel * std::max(std::abs(a), std::abs(b)));
}

/// Constant load y on every bus-hour.
inline Eigen::MatrixXd flat_load(const ppuc::SystemModel& s, double y) {
  return Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(s.num_buses()), s.horizon, y);
}

/// Run-length check of one unit's on/off sequence against its minimum up and
/// down times and initial state. Written without reference to the MILP rows.
inline bool status_feasible(const ppuc::Generator& g, const std::vector<int>& u) {
  int state = g.initially_on() ? 1 : 0;
  int run = g.initially_on() ? g.initial_on_hours : g.initial_off_hours;
  for (int x : u) {
    if (x == state) {
      ++run;
      continue;
    }
    // Leaving a run: it must have lasted long enough.
    if (state == 1 && run < g.min_up) return false;
    if (state == 0 && run < g.min_down) return false;
    state = x;
    run = 1;
  }
  return true;
}

/// eta^T z from an on/off matrix and the units' initial status.
inline double commitment_cost(const ppuc::SystemModel& s, const Eigen::MatrixXi& u) {
  double cost = 0.0;
  for (std::size_t g = 0; g < s.num_generators(); ++g) {
    const auto& gen = s.generators[g];
    int prev = gen.initially_on() ? 1 : 0;
    for (int h = 0; h < s.horizon; ++h) {
      const int cur = u(static_cast<Eigen::Index>(g), h);
      cost += gen.no_load_cost * cur;
      if (cur && !prev) cost += gen.startup_cost;
      if (!cur && prev) cost += gen.shutdown_cost;
      prev = cur;
    }
  }
  return cost;
}

/// Every on/off matrix whose rows pass status_feasible.
inline std::vector<Eigen::MatrixXi> feasible_statuses(const ppuc::SystemModel& s) {
  const int G = static_cast<int>(s.num_generators());
  const int H = s.horizon;
  const int bits = G * H;
  std::vector<Eigen::MatrixXi> out;
  for (long mask = 0; mask < (1L << bits); ++mask) {
    Eigen::MatrixXi u(G, H);
    bool ok = true;
    for (int g = 0; g < G && ok; ++g) {
      std::vector<int> row(static_cast<std::size_t>(H));
      for (int h = 0; h < H; ++h) {
        row[h] = static_cast<int>((mask >> (g * H + h)) & 1L);
        u(g, h) = row[h];
      }
      ok = status_feasible(s.generators[static_cast<std::size_t>(g)], row);
    }
    if (ok) out.push_back(u);
  }
  return out;
}

struct OracleOptimum {
  double objective = std::numeric_limits<double>::infinity();
  Eigen::MatrixXi u;
};

/// Exhaustive minimum of eta^T z + sum_s w_s Q(z; y_s) over feasible z.
inline OracleOptimum enumerate_optimum(const ppuc::SystemModel& s, const std::vector<Eigen::MatrixXd>& scenarios,
                                       const std::vector<double>& weights) {
  OracleOptimum best;
  for (const auto& u : feasible_statuses(s)) {
    const auto schedule = ppuc::CommitmentSchedule::from_status(s, u);
    double value = commitment_cost(s, u);
    try {
      for (std::size_t k = 0; k < scenarios.size(); ++k) {
        value += weights[k] * ppuc::second_stage_value(s, schedule, scenarios[k]);
      }
    } catch (const ppuc::SolverError&) {
      continue;  // dispatch infeasible for this status pattern (initial ramp)
    }
    if (value < best.objective) best = {value, u};
  }
  return best;
}

/// Energy cost of one unit producing p MW (p = 0 when off), without the
/// commitment cost.
inline double energy_cost(const ppuc::Generator& g, double p) {
  if (p <= 0.0) return 0.0;
  double cost = g.cost_segments.front().price * g.p_min;
  double rest = p - g.p_min;
  for (const auto& seg : g.cost_segments) {
    const double take = std::min(rest, seg.mw);
    cost += take * seg.price;
    rest -= take;
    if (rest <= 0.0) break;
  }
  return cost;
}

/// Q(z; y) by dynamic programming over integer dispatch levels on a single-bus
/// system without lines.
inline double grid_second_stage(const ppuc::SystemModel& s, const Eigen::MatrixXi& u, const Eigen::MatrixXd& y) {
  const int G = static_cast<int>(s.num_generators());
  const int H = s.horizon;
  auto states_at = [&](int h) {
    std::vector<std::vector<int>> per(static_cast<std::size_t>(G));
    for (int g = 0; g < G; ++g) {
      const auto& gen = s.generators[static_cast<std::size_t>(g)];
      if (u(g, h)) {
        for (int p = static_cast<int>(std::ceil(gen.p_min)); p <= static_cast<int>(std::floor(gen.p_max)); ++p) {
          per[static_cast<std::size_t>(g)].push_back(p);
        }
      } else {
        per[static_cast<std::size_t>(g)].push_back(0);
      }
    }
    std::vector<std::vector<int>> combos{{}};
    for (const auto& options : per) {
      std::vector<std::vector<int>> next;
      for (const auto& c : combos) {
        for (int p : options) {
          auto e = c;
          e.push_back(p);
          next.push_back(e);
        }
      }
      combos = std::move(next);
    }
    return combos;
  };
  auto hour_cost = [&](const std::vector<int>& p, int h) {
    double c = 0.0;
    double total = 0.0;
    for (int g = 0; g < G; ++g) {
      c += energy_cost(s.generators[static_cast<std::size_t>(g)], p[static_cast<std::size_t>(g)]);
      total += p[static_cast<std::size_t>(g)];
    }
    const double load = y.col(h).sum();
    if (total < load) c += s.voll * (load - total);
    if (total > load) c += s.overgen_penalty * (total - load);
    return c;
  };
  auto transition_ok = [&](const std::vector<int>& prev, const std::vector<int>& cur, int h) {
    for (int g = 0; g < G; ++g) {
      const auto& gen = s.generators[static_cast<std::size_t>(g)];
      const int on_prev = h == 0 ? (gen.initially_on() ? 1 : 0) : u(g, h - 1);
      const int on = u(g, h);
      const double p_prev = h == 0 ? gen.initial_power : prev[static_cast<std::size_t>(g)];
      const double p = cur[static_cast<std::size_t>(g)];
      const double up_limit = on_prev ? gen.ramp_up : gen.p_min;
      const double down_limit = on ? gen.ramp_down : gen.p_min;
      if (p - p_prev > up_limit + 1e-9) return false;
      if (p_prev - p > down_limit + 1e-9) return false;
    }
    return true;
  };

  const double inf = std::numeric_limits<double>::infinity();
  auto prev_states = states_at(0);
  std::vector<double> value(prev_states.size(), inf);
  for (std::size_t i = 0; i < prev_states.size(); ++i) {
    if (transition_ok({}, prev_states[i], 0)) value[i] = hour_cost(prev_states[i], 0);
  }
  for (int h = 1; h < H; ++h) {
    auto cur_states = states_at(h);
    std::vector<double> next(cur_states.size(), inf);
    for (std::size_t j = 0; j < cur_states.size(); ++j) {
      const double c = hour_cost(cur_states[j], h);
      for (std::size_t i = 0; i < prev_states.size(); ++i) {
        if (value[i] == inf || !transition_ok(prev_states[i], cur_states[j], h)) continue;
        next[j] = std::min(next[j], value[i] + c);
      }
    }
    prev_states = std::move(cur_states);
    value = std::move(next);
  }
  return *std::min_element(value.begin(), value.end());
}

/// Walks a tree's node array directly.
inline int walk(const ppuc::RegressionTree& tree, const Eigen::VectorXd& x) {
  const auto& nodes = tree.nodes();
  std::size_t at = 0;
  while (nodes[at].leaf < 0) {
    const auto& n = nodes[at];
    at = static_cast<std::size_t>(x[n.feature] <= n.threshold ? n.left : n.right);
  }
  return nodes[at].leaf;
}

/// Leaf co-occurrence weights recounted by routing every training row again,
/// ignoring the membership lists stored in the leaves.
inline Eigen::VectorXd brute_force_weights(const ppuc::RandomForest& forest, const Eigen::MatrixXd& X_train,
                                           const Eigen::VectorXd& x) {
  const auto D = X_train.rows();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(D);
  for (const auto& tree : forest.trees) {
    const int target = walk(tree, x);
    std::vector<Eigen::Index> same;
    for (Eigen::Index d = 0; d < D; ++d) {
      if (walk(tree, X_train.row(d).transpose()) == target) same.push_back(d);
    }
    for (auto d : same) w[d] += 1.0 / static_cast<double>(same.size());
  }
  return w / static_cast<double>(forest.trees.size());
}

inline double shannon(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

/// Random probability vector with some exact zeros.
inline Eigen::VectorXd random_simplex(std::mt19937_64& rng, int n) {
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = u(rng) < 0.2 ? 0.0 : e(rng);
  if (w.sum() == 0.0) w[0] = 1.0;
  return w / w.sum();
}

/// Covariates with three signal columns at random positions. Hourly target h
/// follows signal h % 3; three decoy columns track one signal each but never
/// enter the targets, and the rest are pure noise.
struct SignalData {
  Eigen::MatrixXd X;
  Eigen::MatrixXd targets;  ///< D x 24
  std::vector<int> signal;  ///< ascending
};

inline SignalData signal_noise(std::uint64_t seed, int D = 150, int columns = 40) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::vector<int> order(static_cast<std::size_t>(columns));
  for (int j = 0; j < columns; ++j) order[static_cast<std::size_t>(j)] = j;
  std::shuffle(order.begin(), order.end(), rng);
  SignalData out{Eigen::MatrixXd(D, columns), Eigen::MatrixXd(D, 24), {order[0], order[1], order[2]}};
  for (int i = 0; i < D; ++i) {
    for (int j = 0; j < columns; ++j) out.X(i, j) = n01(rng);
    for (int k = 0; k < 3; ++k) {
      out.X(i, order[static_cast<std::size_t>(3 + k)]) = 0.75 * out.X(i, order[static_cast<std::size_t>(k)]) + 0.66 * n01(rng);
    }
    for (int h = 0; h < 24; ++h) out.targets(i, h) = 10.0 * out.X(i, order[static_cast<std::size_t>(h % 3)]) + 2.0 * n01(rng);
  }
  std::sort(out.signal.begin(), out.signal.end());
  return out;
}

/// Single-bus sample: one row of loads per day, covariates given per day.
inline ppuc::Sample bus_sample(const std::vector<std::vector<double>>& loads, const Eigen::MatrixXd& X) {
  ppuc::Sample out;
  out.X = X;
  for (std::size_t i = 0; i < loads.size(); ++i) {
    Eigen::MatrixXd y(1, static_cast<Eigen::Index>(loads[i].size()));
    for (std::size_t h = 0; h < loads[i].size(); ++h) y(0, static_cast<Eigen::Index>(h)) = loads[i][h];
    out.Y.push_back(y);
    out.dates.push_back(ppuc::parse_date("2020-01-01") + std::chrono::days{static_cast<int>(i)});
  }
  return out;
}

/// Two load regimes, announced by covariate 0.
struct Regimes {
  ppuc::Sample train;
  ppuc::Sample validation;
};

inline Regimes regimes(std::uint64_t seed, int D, int V) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-4.0, 4.0);
  auto draw = [&](int n) {
    std::vector<std::vector<double>> loads;
    Eigen::MatrixXd X(n, 2);
    for (int i = 0; i < n; ++i) {
      const bool high = (i + seed) % 2 == 0;
      X(i, 0) = high ? 1.0 : 0.0;
      X(i, 1) = jitter(rng);
      const double base = high ? 70.0 : 18.0;
      loads.push_back({base + jitter(rng), base + 10.0 + jitter(rng), base + 5.0 + jitter(rng)});
    }
    return bus_sample(loads, X);
  };
  Regimes r;
  r.train = draw(D);
  r.validation = draw(V);
  return r;
}

}  // namespace testing
