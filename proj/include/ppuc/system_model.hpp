#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ppuc {

/// One block of a convex piecewise-linear energy cost curve.
struct CostSegment {
  double mw = 0.0;     ///< segment width, MW
  double price = 0.0;  ///< $/MWh
};

struct Generator {
  std::string id;
  std::string bus;
  double p_min = 0.0;
  double p_max = 0.0;
  double ramp_up = 0.0;    ///< MW/h
  double ramp_down = 0.0;  ///< MW/h
  int min_up = 1;          ///< hours
  int min_down = 1;        ///< hours
  double no_load_cost = 0.0;
  double startup_cost = 0.0;
  double shutdown_cost = 0.0;
  std::vector<CostSegment> cost_segments;
  int initial_on_hours = 0;
  int initial_off_hours = 0;
  double initial_power = 0.0;  ///< MW at hour 0

  [[nodiscard]] bool initially_on() const { return initial_on_hours > 0; }
  /// Price of the first segment; the p_min block is charged at this price.
  [[nodiscard]] double min_output_price() const;
  [[nodiscard]] double max_segment_price() const;
};

struct Bus {
  std::string id;
};

struct TransmissionLine {
  std::string id;
  double flow_limit = 0.0;  ///< MW
  Eigen::VectorXd isf;      ///< injection shift factor per bus
};

/// Grid data shared by every UC instance. Immutable once loaded.
struct SystemModel {
  std::string name;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<TransmissionLine> lines;
  double voll = 10000.0;            ///< $/MWh for curtailed load
  double overgen_penalty = 1000.0;  ///< $/MWh for excess-energy slack
  int horizon = 24;                 ///< hours

  [[nodiscard]] std::size_t num_buses() const { return buses.size(); }
  [[nodiscard]] std::size_t num_generators() const { return generators.size(); }
  [[nodiscard]] std::size_t num_lines() const { return lines.size(); }

  /// Index of the bus with the given id; throws ValidationError when unknown.
  [[nodiscard]] std::size_t bus_index(const std::string& id) const;
  /// Bus index of every generator, in generator order.
  [[nodiscard]] std::vector<std::size_t> generator_buses() const;
};

/// Checks every invariant of the model; throws ValidationError naming the
/// violated invariant and the entity id.
void validate(const SystemModel& system);

/// Parses and validates a system document.
[[nodiscard]] SystemModel parse_system(const nlohmann::json& doc);
[[nodiscard]] SystemModel load_system(const std::filesystem::path& path);
[[nodiscard]] nlohmann::json to_json(const SystemModel& system);

/// Sum of p_max over all generators, MW.
[[nodiscard]] double aggregate_capacity(const SystemModel& system);

}  // namespace ppuc
