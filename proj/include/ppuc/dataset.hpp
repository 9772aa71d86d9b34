#pragma once

#include <Eigen/Core>

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppuc/system_model.hpp"

namespace ppuc {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD.
[[nodiscard]] Date parse_date(const std::string& text);
[[nodiscard]] std::string format_date(Date date);

/// Inclusive range of calendar days.
struct DateRange {
  Date first;
  Date last;

  [[nodiscard]] bool contains(Date d) const { return first <= d && d <= last; }
  /// Parses "YYYY-MM-DD..YYYY-MM-DD".
  [[nodiscard]] static DateRange parse(const std::string& text);
  [[nodiscard]] std::string to_string() const;
};

/// Hourly per-bus net load and exogenous measurements, whole days only.
struct HourlyTable {
  Date first_day;
  std::vector<std::string> exo_names;
  Eigen::MatrixXd load;  ///< hours x buses (system bus order), MW
  Eigen::MatrixXd exo;   ///< hours x exogenous columns

  [[nodiscard]] int num_days() const { return static_cast<int>(load.rows() / 24); }
  /// Bus-summed net load per hour.
  [[nodiscard]] Eigen::VectorXd system_load() const { return load.rowwise().sum(); }
};

[[nodiscard]] HourlyTable parse_timeseries(std::istream& in, const SystemModel& system,
                                           const std::string& source = "<stream>");
[[nodiscard]] HourlyTable ingest_timeseries(const std::filesystem::path& path, const SystemModel& system);

/// One ISO date per line; blank lines and lines starting with '#' are skipped.
[[nodiscard]] std::vector<Date> parse_holidays(std::istream& in, const std::string& source = "<stream>");
[[nodiscard]] std::vector<Date> load_holidays(const std::filesystem::path& path);

/// Days of history required before the first usable day.
inline constexpr int kHistoryDays = 31;

/// Observations (one per usable day) plus named chronological splits.
struct Dataset {
  std::vector<Date> dates;
  Eigen::MatrixXd X;               ///< observations x covariates
  std::vector<Eigen::MatrixXd> Y;  ///< per observation, buses x 24, MW
  std::vector<std::string> covariate_names;
  std::vector<bool> net_load_columns;  ///< linear in net load, rescaled with it
  std::vector<bool> calendar_columns;  ///< one-hot calendar indicators
  double scale = 1.0;                  ///< factor already applied to net load
  std::vector<int> train, validation, test;

  [[nodiscard]] int size() const { return static_cast<int>(dates.size()); }
  [[nodiscard]] int num_covariates() const { return static_cast<int>(X.cols()); }
};

[[nodiscard]] Dataset build_covariates(const HourlyTable& table, const std::vector<Date>& holidays);

/// Factor k mapping the largest system-wide hourly net load to 90% of capacity.
[[nodiscard]] double scale_factor(const Dataset& dataset, const SystemModel& system);
[[nodiscard]] Dataset scale_net_load(Dataset dataset, const SystemModel& system);
[[nodiscard]] HourlyTable scale_table(HourlyTable table, double k);

void split(Dataset& dataset, const DateRange& train, const DateRange& validation, const DateRange& test);

/// Rows of a dataset, optionally restricted to a covariate subset.
struct Sample {
  std::vector<Date> dates;
  Eigen::MatrixXd X;
  std::vector<Eigen::MatrixXd> Y;

  [[nodiscard]] int size() const { return static_cast<int>(dates.size()); }
};

[[nodiscard]] Sample subset(const Dataset& dataset, const std::vector<int>& rows,
                            const std::vector<int>& columns = {});
/// First n rows of a sample.
[[nodiscard]] Sample head(const Sample& sample, int n);

/// Labels flattened column-major, one row per observation.
[[nodiscard]] Eigen::MatrixXd label_matrix(const std::vector<Eigen::MatrixXd>& Y);
[[nodiscard]] Eigen::MatrixXd unflatten_label(const Eigen::VectorXd& flat, Eigen::Index buses);
/// Bus-summed hourly net load, observations x 24.
[[nodiscard]] Eigen::MatrixXd system_hourly(const std::vector<Eigen::MatrixXd>& Y);

[[nodiscard]] nlohmann::json to_json(const Dataset& dataset);
[[nodiscard]] Dataset dataset_from_json(const nlohmann::json& doc);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
[[nodiscard]] Dataset load_dataset(const std::filesystem::path& path);

}  // namespace ppuc
