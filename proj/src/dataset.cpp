#include "ppuc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ppuc/error.hpp"

namespace ppuc {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_number(const std::string& cell, const std::string& where) {
  double value = 0.0;
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end) throw ParseError(where + ": non-numeric cell '" + cell + "'");
  return value;
}

Date make_date(int y, int m, int d, const std::string& text) {
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw ParseError("invalid date '" + text + "'");
  return Date{ymd};
}

/// Hours since the epoch for "YYYY-MM-DD[T ]HH[:MM[:SS]]".
long long parse_hour_stamp(const std::string& text, const std::string& where) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  const int n = std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &s);
  if (n < 5 || (sep != 'T' && sep != ' ') || h < 0 || h > 23) {
    throw ParseError(where + ": bad timestamp '" + text + "'");
  }
  if (mi != 0 || s != 0) throw DataError(where + ": timestamp '" + text + "' is not on the hour");
  const Date day = make_date(y, mo, d, text);
  return static_cast<long long>(day.time_since_epoch().count()) * 24 + h;
}

std::string format_hour_stamp(long long hours) {
  const Date day{std::chrono::days{hours / 24}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02lld:00", format_date(day).c_str(), hours % 24);
  return buf;
}

std::string two_digit(int h) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", h);
  return buf;
}

bool is_weekend(Date d) {
  const std::chrono::weekday wd{d};
  return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

}  // namespace

Date parse_date(const std::string& text) {
  int y = 0, m = 0, d = 0;
  int consumed = 0;
  const std::string t = trim(text);
  if (std::sscanf(t.c_str(), "%4d-%2d-%2d%n", &y, &m, &d, &consumed) != 3 || consumed != static_cast<int>(t.size())) {
    throw ParseError("invalid date '" + text + "' (expected YYYY-MM-DD)");
  }
  return make_date(y, m, d, text);
}

std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

DateRange DateRange::parse(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw ParseError("invalid date range '" + text + "' (expected A..B)");
  DateRange r{parse_date(text.substr(0, dots)), parse_date(text.substr(dots + 2))};
  if (r.last < r.first) throw ParseError("date range '" + text + "' ends before it starts");
  return r;
}

std::string DateRange::to_string() const { return format_date(first) + ".." + format_date(last); }

HourlyTable parse_timeseries(std::istream& in, const SystemModel& system, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty timeseries file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "timestamp") throw ParseError(source + ": first column must be 'timestamp'");

  const std::size_t B = system.num_buses();
  std::vector<int> bus_column(B, -1);
  std::vector<int> exo_columns;
  HourlyTable table;
  std::set<std::string> seen;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (!seen.insert(header[c]).second) throw ParseError(source + ": duplicate column '" + header[c] + "'");
    bool is_bus = false;
    for (std::size_t b = 0; b < B; ++b) {
      if (system.buses[b].id == header[c]) {
        bus_column[b] = static_cast<int>(c);
        is_bus = true;
      }
    }
    if (!is_bus) {
      exo_columns.push_back(static_cast<int>(c));
      table.exo_names.push_back(header[c]);
    }
  }
  for (std::size_t b = 0; b < B; ++b) {
    if (bus_column[b] < 0) throw DataError(source + ": no column for bus '" + system.buses[b].id + "'");
  }

  std::vector<double> load, exo;
  long long first = 0;
  long long rows = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " cells, found " +
                       std::to_string(cells.size()));
    }
    const long long stamp = parse_hour_stamp(cells[0], where);
    if (rows == 0) {
      if (stamp % 24 != 0) throw DataError(where + ": timeseries must start at hour 00");
      first = stamp;
    } else if (stamp != first + rows) {
      if (stamp <= first + rows - 1) throw DataError(where + ": timestamps are not strictly increasing");
      throw DataError(where + ": missing hours between " + format_hour_stamp(first + rows - 1) + " and " +
                      cells[0]);
    }
    for (std::size_t b = 0; b < B; ++b) load.push_back(parse_number(cells[bus_column[b]], where));
    for (int c : exo_columns) exo.push_back(parse_number(cells[c], where));
    ++rows;
  }
  if (rows == 0) throw DataError(source + ": no data rows");
  if (rows % 24 != 0) {
    throw DataError(source + ": last day is incomplete (" + std::to_string(rows % 24) + " of 24 hours)");
  }

  table.first_day = Date{std::chrono::days{first / 24}};
  const auto E = static_cast<Eigen::Index>(exo_columns.size());
  table.load = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      load.data(), rows, static_cast<Eigen::Index>(B));
  table.exo = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(exo.data(), rows, E);
  return table;
}

HourlyTable ingest_timeseries(const std::filesystem::path& path, const SystemModel& system) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open timeseries '" + path.string() + "'");
  return parse_timeseries(in, system, path.string());
}

std::vector<Date> parse_holidays(std::istream& in, const std::string& source) {
  std::vector<Date> days;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      days.push_back(parse_date(t));
    } catch (const ParseError& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::sort(days.begin(), days.end());
  days.erase(std::unique(days.begin(), days.end()), days.end());
  return days;
}

std::vector<Date> load_holidays(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open holiday list '" + path.string() + "'");
  return parse_holidays(in, path.string());
}

Dataset build_covariates(const HourlyTable& table, const std::vector<Date>& holidays) {
  const int days = table.num_days();
  if (days <= kHistoryDays) {
    throw DataError("need more than " + std::to_string(kHistoryDays) + " days of history, got " +
                    std::to_string(days));
  }
  const Eigen::VectorXd S = table.system_load();
  const auto hours = S.size();
  std::vector<double> prefix(static_cast<std::size_t>(hours) + 1, 0.0);
  for (Eigen::Index t = 0; t < hours; ++t) prefix[t + 1] = prefix[t] + S[t];
  auto trailing_mean = [&](Eigen::Index t, Eigen::Index window) {
    return (prefix[t + 1] - prefix[t + 1 - window]) / static_cast<double>(window);
  };

  Dataset ds;
  const Eigen::Index windows[] = {24, 168, 720};
  auto add_block = [&](const std::string& stem, bool net_load) {
    for (int h = 1; h <= 24; ++h) {
      ds.covariate_names.push_back(stem + "_lag_" + two_digit(h));
      ds.net_load_columns.push_back(net_load);
      ds.calendar_columns.push_back(false);
    }
  };
  add_block("netload", true);
  for (auto w : windows) add_block("netload_ma" + std::to_string(w), true);
  for (const auto& name : table.exo_names) add_block(name, false);
  for (const char* name : {"weekend_1", "weekend_0", "holiday_1", "holiday_0"}) {
    ds.covariate_names.emplace_back(name);
    ds.net_load_columns.push_back(false);
    ds.calendar_columns.push_back(true);
  }

  const auto B = table.load.cols();
  const auto E = table.exo.cols();
  const int n = days - kHistoryDays;
  ds.X.resize(n, static_cast<Eigen::Index>(ds.covariate_names.size()));
  ds.Y.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int d = kHistoryDays + i;
    const Date date = table.first_day + std::chrono::days{d};
    const Eigen::Index prev = static_cast<Eigen::Index>(d - 1) * 24;
    Eigen::Index c = 0;
    for (int h = 0; h < 24; ++h) ds.X(i, c++) = S[prev + h];
    for (auto w : windows) {
      for (int h = 0; h < 24; ++h) ds.X(i, c++) = trailing_mean(prev + h, w);
    }
    for (Eigen::Index e = 0; e < E; ++e) {
      for (int h = 0; h < 24; ++h) ds.X(i, c++) = table.exo(prev + h, e);
    }
    const bool weekend = is_weekend(date);
    const bool holiday = std::binary_search(holidays.begin(), holidays.end(), date);
    ds.X(i, c++) = weekend ? 1.0 : 0.0;
    ds.X(i, c++) = weekend ? 0.0 : 1.0;
    ds.X(i, c++) = holiday ? 1.0 : 0.0;
    ds.X(i, c++) = holiday ? 0.0 : 1.0;

    ds.dates.push_back(date);
    ds.Y.push_back(table.load.block(static_cast<Eigen::Index>(d) * 24, 0, 24, B).transpose());
  }
  return ds;
}

double scale_factor(const Dataset& dataset, const SystemModel& system) {
  if (dataset.Y.empty()) throw DataError("cannot scale an empty dataset");
  double peak = 0.0;
  for (const auto& y : dataset.Y) peak = std::max(peak, y.colwise().sum().maxCoeff());
  if (!(peak > 0.0)) throw DataError("net load is never positive; scaling factor undefined");
  return 0.9 * aggregate_capacity(system) / peak;
}

Dataset scale_net_load(Dataset dataset, const SystemModel& system) {
  const double k = scale_factor(dataset, system);
  for (auto& y : dataset.Y) y *= k;
  for (Eigen::Index c = 0; c < dataset.X.cols(); ++c) {
    if (dataset.net_load_columns[static_cast<std::size_t>(c)]) dataset.X.col(c) *= k;
  }
  dataset.scale *= k;
  return dataset;
}

HourlyTable scale_table(HourlyTable table, double k) {
  table.load *= k;
  return table;
}

void split(Dataset& dataset, const DateRange& train, const DateRange& validation, const DateRange& test) {
  if (!(train.last < validation.first) || !(validation.last < test.first)) {
    throw DataError("split ranges must be disjoint and ordered train < validation < test (got " + train.to_string() +
                    ", " + validation.to_string() + ", " + test.to_string() + ")");
  }
  dataset.train.clear();
  dataset.validation.clear();
  dataset.test.clear();
  for (int i = 0; i < dataset.size(); ++i) {
    const Date d = dataset.dates[static_cast<std::size_t>(i)];
    if (train.contains(d)) dataset.train.push_back(i);
    if (validation.contains(d)) dataset.validation.push_back(i);
    if (test.contains(d)) dataset.test.push_back(i);
  }
  const std::pair<const char*, const std::vector<int>*> parts[] = {
      {"train", &dataset.train}, {"validation", &dataset.validation}, {"test", &dataset.test}};
  for (const auto& [name, rows] : parts) {
    if (rows->empty()) throw DataError(std::string(name) + " split is empty");
  }
}

Sample subset(const Dataset& dataset, const std::vector<int>& rows, const std::vector<int>& columns) {
  std::vector<int> cols = columns;
  if (cols.empty()) {
    cols.resize(static_cast<std::size_t>(dataset.num_covariates()));
    std::iota(cols.begin(), cols.end(), 0);
  }
  Sample s;
  s.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int i = rows[r];
    if (i < 0 || i >= dataset.size()) throw ValidationError("row index out of range");
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cols[c] < 0 || cols[c] >= dataset.num_covariates()) throw ValidationError("covariate index out of range");
      s.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = dataset.X(i, cols[c]);
    }
    s.dates.push_back(dataset.dates[static_cast<std::size_t>(i)]);
    s.Y.push_back(dataset.Y[static_cast<std::size_t>(i)]);
  }
  return s;
}

Sample head(const Sample& sample, int n) {
  if (n < 1 || n > sample.size()) {
    throw DataError("requested " + std::to_string(n) + " observations, sample has " + std::to_string(sample.size()));
  }
  Sample s;
  s.dates.assign(sample.dates.begin(), sample.dates.begin() + n);
  s.Y.assign(sample.Y.begin(), sample.Y.begin() + n);
  s.X = sample.X.topRows(n);
  return s;
}

Eigen::MatrixXd label_matrix(const std::vector<Eigen::MatrixXd>& Y) {
  if (Y.empty()) return {};
  Eigen::MatrixXd out(static_cast<Eigen::Index>(Y.size()), Y.front().size());
  for (std::size_t i = 0; i < Y.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(Y[i].data(), Y[i].size());
  }
  return out;
}

Eigen::MatrixXd unflatten_label(const Eigen::VectorXd& flat, Eigen::Index buses) {
  if (buses < 1 || flat.size() % buses != 0) throw ValidationError("label length is not a multiple of bus count");
  return Eigen::Map<const Eigen::MatrixXd>(flat.data(), buses, flat.size() / buses);
}

Eigen::MatrixXd system_hourly(const std::vector<Eigen::MatrixXd>& Y) {
  if (Y.empty()) return {};
  Eigen::MatrixXd out(static_cast<Eigen::Index>(Y.size()), Y.front().cols());
  for (std::size_t i = 0; i < Y.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = Y[i].colwise().sum();
  return out;
}

nlohmann::json to_json(const Dataset& dataset) {
  nlohmann::json dates = nlohmann::json::array();
  for (auto d : dataset.dates) dates.push_back(format_date(d));
  nlohmann::json X = nlohmann::json::array();
  for (Eigen::Index i = 0; i < dataset.X.rows(); ++i) {
    X.push_back(std::vector<double>(dataset.X.row(i).begin(), dataset.X.row(i).end()));
  }
  nlohmann::json Y = nlohmann::json::array();
  for (const auto& y : dataset.Y) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index b = 0; b < y.rows(); ++b) rows.push_back(std::vector<double>(y.row(b).begin(), y.row(b).end()));
    Y.push_back(std::move(rows));
  }
  return {{"dates", dates},
          {"covariate_names", dataset.covariate_names},
          {"net_load_columns", dataset.net_load_columns},
          {"calendar_columns", dataset.calendar_columns},
          {"scale", dataset.scale},
          {"splits", {{"train", dataset.train}, {"validation", dataset.validation}, {"test", dataset.test}}},
          {"X", X},
          {"Y", Y}};
}

Dataset dataset_from_json(const nlohmann::json& doc) {
  try {
    Dataset ds;
    for (const auto& d : doc.at("dates")) ds.dates.push_back(parse_date(d.get<std::string>()));
    ds.covariate_names = doc.at("covariate_names").get<std::vector<std::string>>();
    ds.net_load_columns = doc.at("net_load_columns").get<std::vector<bool>>();
    ds.calendar_columns = doc.at("calendar_columns").get<std::vector<bool>>();
    ds.scale = doc.at("scale").get<double>();
    const auto& splits = doc.at("splits");
    ds.train = splits.at("train").get<std::vector<int>>();
    ds.validation = splits.at("validation").get<std::vector<int>>();
    ds.test = splits.at("test").get<std::vector<int>>();
    const auto n = static_cast<Eigen::Index>(ds.dates.size());
    const auto d = static_cast<Eigen::Index>(ds.covariate_names.size());
    const auto& X = doc.at("X");
    if (static_cast<Eigen::Index>(X.size()) != n) throw ParseError("dataset X has wrong row count");
    ds.X.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto row = X[static_cast<std::size_t>(i)].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(row.size()) != d) throw ParseError("dataset X row has wrong length");
      for (Eigen::Index c = 0; c < d; ++c) ds.X(i, c) = row[static_cast<std::size_t>(c)];
    }
    for (const auto& y : doc.at("Y")) {
      const auto rows = y.get<std::vector<std::vector<double>>>();
      Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t b = 0; b < rows.size(); ++b) {
        if (static_cast<Eigen::Index>(rows[b].size()) != m.cols()) throw ParseError("ragged net-load matrix");
        for (std::size_t h = 0; h < rows[b].size(); ++h) m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(h)) = rows[b][h];
      }
      ds.Y.push_back(std::move(m));
    }
    if (static_cast<Eigen::Index>(ds.Y.size()) != n) throw ParseError("dataset Y has wrong observation count");
    if (static_cast<Eigen::Index>(ds.net_load_columns.size()) != d ||
        static_cast<Eigen::Index>(ds.calendar_columns.size()) != d) {
      throw ParseError("dataset column flags have wrong length");
    }
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed dataset document: ") + e.what());
  }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << to_json(dataset).dump() << '\n';
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset bundle '" + path.string() + "'");
  try {
    return dataset_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace ppuc
