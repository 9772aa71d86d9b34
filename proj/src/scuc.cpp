#include "ppuc/scuc.hpp"

#include <cmath>
#include <string>

#include "ppuc/error.hpp"
#include "ppuc/weights.hpp"

namespace ppuc {

namespace {

using milp::LinearExpr;
using milp::ModelBuilder;
using milp::Sense;
using milp::Var;

void check_load_shape(const SystemModel& system, const Eigen::MatrixXd& y) {
  if (y.rows() != static_cast<Eigen::Index>(system.num_buses()) || y.cols() != system.horizon) {
    throw ValidationError("net load must be " + std::to_string(system.num_buses()) + " x " +
                          std::to_string(system.horizon) + ", got " + std::to_string(y.rows()) + " x " +
                          std::to_string(y.cols()));
  }
}

/// Hours at the start of the horizon during which the unit must stay on
/// (remaining min-up time, or ramping down from initial_power to p_min).
int forced_on_hours(const Generator& g) {
  if (!g.initially_on()) return 0;
  int hours = std::max(0, g.min_up - g.initial_on_hours);
  const double excess = g.initial_power - g.p_min;
  if (excess > 1e-9) hours = std::max(hours, static_cast<int>(std::ceil(excess / g.ramp_down - 1e-9)));
  return hours;
}

int forced_off_hours(const Generator& g) {
  if (g.initially_on()) return 0;
  return std::max(0, g.min_down - g.initial_off_hours);
}

int to_binary(double x) { return x > 0.5 ? 1 : 0; }

Eigen::MatrixXd isf_matrix(const SystemModel& system) {
  Eigen::MatrixXd isf(static_cast<Eigen::Index>(system.num_lines()), static_cast<Eigen::Index>(system.num_buses()));
  for (std::size_t l = 0; l < system.num_lines(); ++l) isf.row(static_cast<Eigen::Index>(l)) = system.lines[l].isf.transpose();
  return isf;
}

}  // namespace

CommitmentSchedule CommitmentSchedule::all_off(const SystemModel& system) {
  return from_status(system, Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(system.num_generators()), system.horizon));
}

CommitmentSchedule CommitmentSchedule::from_status(const SystemModel& system, const Eigen::MatrixXi& u) {
  CommitmentSchedule s;
  s.u = u;
  s.v = Eigen::MatrixXi::Zero(u.rows(), u.cols());
  s.w = Eigen::MatrixXi::Zero(u.rows(), u.cols());
  for (Eigen::Index g = 0; g < u.rows(); ++g) {
    int prev = system.generators[static_cast<std::size_t>(g)].initially_on() ? 1 : 0;
    for (Eigen::Index h = 0; h < u.cols(); ++h) {
      s.v(g, h) = std::max(0, u(g, h) - prev);
      s.w(g, h) = std::max(0, prev - u(g, h));
      prev = u(g, h);
    }
  }
  return s;
}

CommitmentTerms build_first_stage(ModelBuilder& model, const SystemModel& system) {
  const int G = static_cast<int>(system.num_generators());
  const int H = system.horizon;
  CommitmentTerms terms;
  terms.generators = G;
  terms.hours = H;
  terms.u.resize(static_cast<std::size_t>(G * H));
  terms.v.resize(terms.u.size());
  terms.w.resize(terms.u.size());

  for (int g = 0; g < G; ++g) {
    const Generator& gen = system.generators[static_cast<std::size_t>(g)];
    std::vector<Var> u(static_cast<std::size_t>(H)), v(u.size()), w(u.size());
    for (int h = 0; h < H; ++h) {
      const std::string suffix = "_" + gen.id + "_" + std::to_string(h + 1);
      u[h] = model.add_binary("u" + suffix);
      v[h] = model.add_binary("v" + suffix);
      w[h] = model.add_binary("w" + suffix);
      terms.u[g * H + h] = u[h];
      terms.v[g * H + h] = v[h];
      terms.w[g * H + h] = w[h];
      terms.cost.add(u[h], gen.no_load_cost).add(v[h], gen.startup_cost).add(w[h], gen.shutdown_cost);
    }

    const double u0 = gen.initially_on() ? 1.0 : 0.0;
    for (int h = 0; h < H; ++h) {
      const std::string suffix = "_" + gen.id + "_" + std::to_string(h + 1);
      LinearExpr logic = LinearExpr(u[h]) - LinearExpr(v[h]) + LinearExpr(w[h]);
      if (h == 0) {
        model.add_constraint(logic, Sense::Equal, u0, "logic" + suffix);
      } else {
        logic.add(u[h - 1], -1.0);
        model.add_constraint(logic, Sense::Equal, 0.0, "logic" + suffix);
      }
      model.add_constraint(LinearExpr(v[h]) + LinearExpr(w[h]), Sense::LessEqual, 1.0, "vw" + suffix);
      if (gen.min_up > 1) {
        LinearExpr window(u[h], -1.0);
        for (int k = std::max(0, h - gen.min_up + 1); k <= h; ++k) window.add(v[k], 1.0);
        model.add_constraint(window, Sense::LessEqual, 0.0, "minup" + suffix);
      }
      if (gen.min_down > 1) {
        LinearExpr window(u[h], 1.0);
        for (int k = std::max(0, h - gen.min_down + 1); k <= h; ++k) window.add(w[k], 1.0);
        model.add_constraint(window, Sense::LessEqual, 1.0, "mindown" + suffix);
      }
    }
    for (int h = 0; h < std::min(H, forced_on_hours(gen)); ++h) model.fix(u[h], 1.0);
    for (int h = 0; h < std::min(H, forced_off_hours(gen)); ++h) model.fix(u[h], 0.0);
  }
  return terms;
}

CommitmentTerms fixed_commitment(const SystemModel& system, const CommitmentSchedule& schedule) {
  const int G = static_cast<int>(system.num_generators());
  const int H = system.horizon;
  if (schedule.u.rows() != G || schedule.u.cols() != H) throw ValidationError("schedule has wrong dimensions");
  CommitmentTerms terms;
  terms.generators = G;
  terms.hours = H;
  terms.u.reserve(static_cast<std::size_t>(G * H));
  for (int g = 0; g < G; ++g) {
    for (int h = 0; h < H; ++h) {
      terms.u.emplace_back(static_cast<double>(schedule.u(g, h)));
      terms.v.emplace_back(static_cast<double>(schedule.v(g, h)));
      terms.w.emplace_back(static_cast<double>(schedule.w(g, h)));
    }
  }
  terms.cost = LinearExpr(first_stage_cost(system, schedule));
  return terms;
}

SecondStageBlock build_second_stage(ModelBuilder& model, const SystemModel& system, const CommitmentTerms& commitment,
                                    const Eigen::MatrixXd& y, const std::string& tag, bool flow_limits) {
  check_load_shape(system, y);
  const int G = static_cast<int>(system.num_generators());
  const int B = static_cast<int>(system.num_buses());
  const int H = system.horizon;
  const auto gen_bus = system.generator_buses();
  std::vector<bool> has_gen(static_cast<std::size_t>(B), false);
  for (auto b : gen_bus) has_gen[b] = true;

  SecondStageBlock block;
  block.segments.resize(static_cast<std::size_t>(G));
  std::vector<LinearExpr> power(static_cast<std::size_t>(G * H));

  for (int g = 0; g < G; ++g) {
    const Generator& gen = system.generators[static_cast<std::size_t>(g)];
    const int K = static_cast<int>(gen.cost_segments.size());
    block.segments[g].resize(static_cast<std::size_t>(K * H));
    for (int h = 0; h < H; ++h) {
      const LinearExpr& on = commitment.on(g, h);
      const bool fixed = on.terms().empty();
      const double on_value = on.constant();
      LinearExpr p = gen.p_min * on;
      LinearExpr above_min;
      for (int k = 0; k < K; ++k) {
        const auto& seg = gen.cost_segments[static_cast<std::size_t>(k)];
        const double ub = fixed ? seg.mw * on_value : seg.mw;
        const Var s = model.add_variable(tag + "seg_" + gen.id + "_" + std::to_string(k) + "_" + std::to_string(h + 1),
                                         0.0, ub);
        block.segments[g][k * H + h] = s;
        above_min.add(s, 1.0);
        block.cost.add(s, seg.price);
      }
      if (!fixed) {
        model.add_constraint(above_min - (gen.p_max - gen.p_min) * on, Sense::LessEqual, 0.0,
                             tag + "cap_" + gen.id + "_" + std::to_string(h + 1));
      }
      block.cost += (gen.min_output_price() * gen.p_min) * on;
      p += above_min;
      power[g * H + h] = std::move(p);
    }

    for (int h = 0; h < H; ++h) {
      const std::string suffix = gen.id + "_" + std::to_string(h + 1);
      const LinearExpr prev = h == 0 ? LinearExpr(gen.initial_power) : power[g * H + h - 1];
      const LinearExpr prev_on = h == 0 ? LinearExpr(gen.initially_on() ? 1.0 : 0.0) : commitment.on(g, h - 1);
      const LinearExpr& cur = power[g * H + h];
      // Startup/shutdown hours may move between 0 and p_min.
      model.add_constraint(cur - prev - gen.ramp_up * prev_on - gen.p_min * commitment.startup(g, h),
                           Sense::LessEqual, 0.0, tag + "rampup_" + suffix);
      model.add_constraint(prev - cur - gen.ramp_down * commitment.on(g, h) - gen.p_min * commitment.shutdown(g, h),
                           Sense::LessEqual, 0.0, tag + "rampdn_" + suffix);
    }
  }

  block.curtail.assign(static_cast<std::size_t>(B * H), Var{});
  block.overgen.assign(static_cast<std::size_t>(B * H), Var{});
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < H; ++h) {
      const std::string suffix = system.buses[static_cast<std::size_t>(b)].id + "_" + std::to_string(h + 1);
      const double load = y(b, h);
      if (load > 0.0) {
        block.curtail[b * H + h] = model.add_variable(tag + "curt_" + suffix, 0.0, load, milp::VarType::Continuous);
        block.cost.add(block.curtail[b * H + h], system.voll);
      }
      if (has_gen[b] || load < 0.0) {
        block.overgen[b * H + h] =
            model.add_variable(tag + "over_" + suffix, 0.0, milp::kInf, milp::VarType::Continuous);
        block.cost.add(block.overgen[b * H + h], system.overgen_penalty);
      }
    }
  }

  // Net injection at every bus, excluding the fixed load.
  auto injection = [&](int b, int h) {
    LinearExpr inj;
    if (block.curtail[b * H + h].valid()) inj.add(block.curtail[b * H + h], 1.0);
    if (block.overgen[b * H + h].valid()) inj.add(block.overgen[b * H + h], -1.0);
    return inj;
  };

  for (int h = 0; h < H; ++h) {
    LinearExpr balance;
    for (int g = 0; g < G; ++g) balance += power[g * H + h];
    for (int b = 0; b < B; ++b) balance += injection(b, h);
    model.add_constraint(balance, Sense::Equal, y.col(h).sum(), tag + "balance_" + std::to_string(h + 1));
  }

  block.flow.resize(system.num_lines() * static_cast<std::size_t>(H));
  for (std::size_t l = 0; l < system.num_lines(); ++l) {
    const auto& line = system.lines[l];
    for (int h = 0; h < H; ++h) {
      LinearExpr flow;
      for (int g = 0; g < G; ++g) {
        const double f = line.isf[static_cast<Eigen::Index>(gen_bus[g])];
        if (f != 0.0) flow.add(power[g * H + h], f);
      }
      double shift = 0.0;
      for (int b = 0; b < B; ++b) {
        const double f = line.isf[b];
        if (f == 0.0) continue;
        flow.add(injection(b, h), f);
        shift += f * y(b, h);
      }
      flow -= LinearExpr(shift);
      block.flow[l * H + h] = std::move(flow);
      if (flow_limits) enforce_flow_limit(model, system, block, static_cast<int>(l), h, tag);
    }
  }
  return block;
}

void enforce_flow_limit(ModelBuilder& model, const SystemModel& system, const SecondStageBlock& block, int line,
                        int hour, const std::string& tag) {
  const auto& l = system.lines[static_cast<std::size_t>(line)];
  model.add_range(block.flow[static_cast<std::size_t>(line * system.horizon + hour)], -l.flow_limit, l.flow_limit,
                  tag + "flow_" + l.id + "_" + std::to_string(hour + 1));
}

DispatchSolution extract_dispatch(const SystemModel& system, const CommitmentTerms& commitment,
                                  const SecondStageBlock& block, const milp::SolveResult& result,
                                  const Eigen::MatrixXd& y) {
  const int G = static_cast<int>(system.num_generators());
  const int B = static_cast<int>(system.num_buses());
  const int H = system.horizon;
  const auto gen_bus = system.generator_buses();

  DispatchSolution d;
  d.p = Eigen::MatrixXd::Zero(G, H);
  d.curtail = Eigen::MatrixXd::Zero(B, H);
  d.overgen = Eigen::MatrixXd::Zero(B, H);
  d.segments.resize(static_cast<std::size_t>(G));
  Eigen::MatrixXd injection = -y;
  for (int g = 0; g < G; ++g) {
    const Generator& gen = system.generators[static_cast<std::size_t>(g)];
    const int K = static_cast<int>(gen.cost_segments.size());
    d.segments[g] = Eigen::MatrixXd::Zero(K, H);
    for (int h = 0; h < H; ++h) {
      double p = gen.p_min * std::round(result.value(commitment.on(g, h)));
      for (int k = 0; k < K; ++k) {
        const double s = result.value(block.segments[g][k * H + h]);
        d.segments[g](k, h) = s;
        p += s;
      }
      d.p(g, h) = p;
      injection(static_cast<Eigen::Index>(gen_bus[g]), h) += p;
    }
  }
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < H; ++h) {
      if (block.curtail[b * H + h].valid()) d.curtail(b, h) = result.value(block.curtail[b * H + h]);
      if (block.overgen[b * H + h].valid()) d.overgen(b, h) = result.value(block.overgen[b * H + h]);
    }
  }
  injection += d.curtail - d.overgen;
  d.line_flow = isf_matrix(system) * injection;
  d.cost = result.value(block.cost);
  return d;
}

double first_stage_cost(const SystemModel& system, const CommitmentSchedule& schedule) {
  double cost = 0.0;
  for (std::size_t g = 0; g < system.num_generators(); ++g) {
    const auto& gen = system.generators[g];
    const auto row = static_cast<Eigen::Index>(g);
    cost += gen.no_load_cost * schedule.u.row(row).sum() + gen.startup_cost * schedule.v.row(row).sum() +
            gen.shutdown_cost * schedule.w.row(row).sum();
  }
  return cost;
}

DispatchSolution solve_second_stage(const SystemModel& system, const CommitmentSchedule& schedule,
                                    const Eigen::MatrixXd& y, const milp::SolveOptions& options) {
  ModelBuilder model;
  const CommitmentTerms terms = fixed_commitment(system, schedule);
  const SecondStageBlock block = build_second_stage(model, system, terms, y, "");
  model.add_objective(block.cost);
  const milp::SolveResult result = milp::solve(model, options);
  if (result.status != milp::SolveStatus::Optimal) {
    throw SolverError(std::string("second-stage LP ended with status ") + milp::to_string(result.status) + ": " +
                      result.message);
  }
  return extract_dispatch(system, terms, block, result, y);
}

double second_stage_value(const SystemModel& system, const CommitmentSchedule& schedule, const Eigen::MatrixXd& y,
                          const milp::SolveOptions& options) {
  return solve_second_stage(system, schedule, y, options).cost;
}

UcSolution solve_weighted_saa(const SystemModel& system, std::span<const Eigen::MatrixXd> scenarios,
                              const Eigen::VectorXd& weights, const UcOptions& options) {
  if (scenarios.empty()) throw ValidationError("weighted SAA needs at least one scenario");
  if (static_cast<std::size_t>(weights.size()) != scenarios.size()) {
    throw ValidationError("weight vector length " + std::to_string(weights.size()) + " does not match " +
                          std::to_string(scenarios.size()) + " scenarios");
  }
  for (const auto& y : scenarios) check_load_shape(system, y);
  const SparseWeights kept = sparsify(weights, options.sparsify_eps);

  ModelBuilder model;
  const CommitmentTerms terms = build_first_stage(model, system);
  model.add_objective(terms.cost);
  std::vector<SecondStageBlock> blocks;
  std::vector<std::string> tags;
  blocks.reserve(kept.indices.size());
  for (std::size_t i = 0; i < kept.indices.size(); ++i) {
    const int s = kept.indices[i];
    tags.push_back("s" + std::to_string(s) + "_");
    blocks.push_back(
        build_second_stage(model, system, terms, scenarios[static_cast<std::size_t>(s)], tags.back(), false));
    model.add_objective(blocks.back().cost, kept.weights[static_cast<Eigen::Index>(i)]);
  }

  const int L = static_cast<int>(system.num_lines());
  const int H = system.horizon;
  std::vector<bool> enforced(static_cast<std::size_t>(L * H), false);
  milp::SolveResult result;
  double wall = 0.0;
  for (;;) {
    result = milp::solve(model, options.solver);
    wall += result.wall_time;
    if (!result.has_solution()) {
      throw SolverError(std::string("UC solve ended with status ") + milp::to_string(result.status) + ": " +
                        result.message);
    }
    // A violated line-hour is enforced in every scenario block at once.
    bool added = false;
    for (int l = 0; l < L; ++l) {
      const double limit = system.lines[static_cast<std::size_t>(l)].flow_limit;
      for (int h = 0; h < H; ++h) {
        if (enforced[static_cast<std::size_t>(l * H + h)]) continue;
        bool violated = false;
        for (const auto& block : blocks) {
          if (std::abs(result.value(block.flow[static_cast<std::size_t>(l * H + h)])) > limit * (1.0 + 1e-9) + 1e-7) {
            violated = true;
            break;
          }
        }
        if (!violated) continue;
        enforced[static_cast<std::size_t>(l * H + h)] = true;
        added = true;
        for (std::size_t i = 0; i < blocks.size(); ++i) enforce_flow_limit(model, system, blocks[i], l, h, tags[i]);
      }
    }
    if (!added) break;
  }
  result.wall_time = wall;

  UcSolution sol;
  const int G = terms.generators;
  Eigen::MatrixXi u(G, H);
  for (int g = 0; g < G; ++g) {
    for (int h = 0; h < H; ++h) u(g, h) = to_binary(result.value(terms.on(g, h)));
  }
  sol.schedule = CommitmentSchedule::from_status(system, u);
  sol.first_stage_cost = first_stage_cost(system, sol.schedule);
  sol.scenario_ids = kept.indices;
  sol.scenario_weights = kept.weights;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    sol.dispatch.push_back(
        extract_dispatch(system, terms, blocks[i], result, scenarios[static_cast<std::size_t>(kept.indices[i])]));
  }
  sol.objective = result.objective;
  sol.status = result.status;
  sol.mip_gap = result.mip_gap;
  sol.wall_time = result.wall_time;
  return sol;
}

UcSolution solve_nsuc(const SystemModel& system, std::span<const Eigen::MatrixXd> scenarios,
                      const UcOptions& options) {
  if (scenarios.empty()) throw ValidationError("NSUC needs at least one scenario");
  const auto n = static_cast<Eigen::Index>(scenarios.size());
  return solve_weighted_saa(system, scenarios, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)), options);
}

UcSolution solve_deterministic(const SystemModel& system, const Eigen::MatrixXd& y, const UcOptions& options) {
  return solve_weighted_saa(system, std::span<const Eigen::MatrixXd>(&y, 1), Eigen::VectorXd::Ones(1), options);
}

namespace {

template <typename Derived>
nlohmann::json matrix_json(const Eigen::MatrixBase<Derived>& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

nlohmann::json to_json(const CommitmentSchedule& schedule) {
  return {{"u", matrix_json(schedule.u)}, {"v", matrix_json(schedule.v)}, {"w", matrix_json(schedule.w)}};
}

nlohmann::json to_json(const DispatchSolution& dispatch) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : dispatch.segments) segs.push_back(matrix_json(s));
  return {{"p", matrix_json(dispatch.p)},
          {"segments", segs},
          {"curtail", matrix_json(dispatch.curtail)},
          {"overgen", matrix_json(dispatch.overgen)},
          {"line_flow", matrix_json(dispatch.line_flow)},
          {"cost", dispatch.cost},
          {"unserved_mwh", dispatch.unserved_energy()}};
}

nlohmann::json to_json(const UcSolution& solution) {
  nlohmann::json scen = nlohmann::json::array();
  for (std::size_t i = 0; i < solution.dispatch.size(); ++i) {
    scen.push_back({{"scenario", solution.scenario_ids[i]},
                    {"weight", solution.scenario_weights[static_cast<Eigen::Index>(i)]},
                    {"dispatch", to_json(solution.dispatch[i])}});
  }
  return {{"schedule", to_json(solution.schedule)},
          {"first_stage_cost", solution.first_stage_cost},
          {"objective", solution.objective},
          {"scenarios", scen},
          {"solver", {{"status", milp::to_string(solution.status)},
                      {"mip_gap", solution.mip_gap},
                      {"wall_time", solution.wall_time}}}};
}

}  // namespace ppuc
