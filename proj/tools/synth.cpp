#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "ppuc/error.hpp"

namespace ppuc::synth {

namespace {

using namespace std::chrono;

class Noise {
 public:
  explicit Noise(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 rng_;
};

Date observed(Date d) {
  const weekday wd{d};
  if (wd == Saturday) return d - days{1};
  if (wd == Sunday) return d + days{1};
  return d;
}

// IEEE 14-bus nominal loads, used as bus shares.
const std::map<std::string, double> kBusShares = {{"2", 21.7}, {"3", 94.2}, {"4", 47.8}, {"5", 7.6},
                                                  {"6", 11.2}, {"9", 29.5}, {"10", 9.0}, {"11", 3.5},
                                                  {"12", 6.1}, {"13", 13.5}, {"14", 14.9}};

std::vector<double> bus_shares(const SystemModel& system) {
  std::vector<double> shares;
  bool known = true;
  for (const auto& b : system.buses) {
    const auto it = kBusShares.find(b.id);
    shares.push_back(it == kBusShares.end() ? 0.0 : it->second);
    if (it == kBusShares.end() && b.id != "1" && b.id != "7" && b.id != "8") known = false;
  }
  if (!known) std::fill(shares.begin(), shares.end(), 1.0);
  double total = 0.0;
  for (double s : shares) total += s;
  for (double& s : shares) s /= total;
  return shares;
}

double day_of_year(Date d) {
  const year_month_day ymd{d};
  return static_cast<double>((d - sys_days{ymd.year() / January / 1}).count());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::vector<Date> federal_holidays(Date first, Date last) {
  std::vector<Date> out;
  const int y0 = static_cast<int>(year_month_day{first}.year());
  const int y1 = static_cast<int>(year_month_day{last}.year());
  for (int yi = y0 - 1; yi <= y1 + 1; ++yi) {
    const year y{yi};
    const Date list[] = {
        observed(sys_days{y / January / 1}),
        sys_days{y / January / Monday[3]},
        sys_days{y / February / Monday[3]},
        sys_days{y / May / Monday[std::chrono::last]},
        observed(sys_days{y / July / 4}),
        sys_days{y / September / Monday[1]},
        sys_days{y / October / Monday[2]},
        observed(sys_days{y / November / 11}),
        sys_days{y / November / Thursday[4]},
        observed(sys_days{y / December / 25}),
    };
    for (Date d : list) {
      if (first <= d && d <= last) out.push_back(d);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void write_timeseries(const SystemModel& system, Date first, Date last, std::uint64_t seed,
                      const std::filesystem::path& path) {
  if (last < first) throw ValidationError("synthetic range ends before it starts");
  const auto holidays = federal_holidays(first, last);
  const auto shares = bus_shares(system);
  Noise noise(seed);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "timestamp";
  for (const auto& b : system.buses) out << ',' << b.id;
  out << ",temperature,ghi,wind\n";

  double temp_anomaly = 0.0;
  double cloud = 0.0;
  double wind_level = 0.0;
  double wind = 7.0;
  for (Date d = first; d <= last; d += days{1}) {
    temp_anomaly = 0.8 * temp_anomaly + 2.2 * noise.normal();
    cloud = 0.6 * cloud + 0.8 * noise.normal();
    wind_level = 0.7 * wind_level + 1.6 * noise.normal();
    const double doy = day_of_year(d);
    const double season = std::sin(two_pi * (doy - 105.0) / 365.25);
    const double sun_season = std::sin(two_pi * (doy - 80.0) / 365.25);
    const double clearness = std::clamp(0.78 + 0.22 * cloud, 0.15, 1.0);
    const bool weekend = weekday{d} == Saturday || weekday{d} == Sunday;
    const bool holiday = std::binary_search(holidays.begin(), holidays.end(), d);
    const year_month_day ymd{d};

    for (int h = 0; h < 24; ++h) {
      const double temperature = 16.0 + 9.0 * season + 6.0 * std::sin(two_pi * (h - 9.0) / 24.0) + temp_anomaly +
                                 0.6 * noise.normal();
      const double daylight = 12.0 + 2.5 * sun_season;
      const double sunrise = 12.5 - daylight / 2.0;
      const double elevation = std::sin(std::numbers::pi * (h + 0.5 - sunrise) / daylight);
      const double ghi = elevation > 0.0 ? (780.0 + 220.0 * sun_season) * std::pow(elevation, 1.2) * clearness : 0.0;
      wind = std::max(0.0, 0.85 * wind + 0.15 * (7.0 + wind_level + 1.5 * std::sin(two_pi * (h - 15.0) / 24.0)) +
                               0.6 * noise.normal());

      const double profile = 0.55 * (1.0 - std::cos(two_pi * (h - 4.0) / 24.0)) +
                             0.35 * std::exp(-0.5 * std::pow((h - 19.0) / 2.0, 2.0)) +
                             0.15 * std::exp(-0.5 * std::pow((h - 8.0) / 1.5, 2.0));
      double demand = 22000.0 + 7000.0 * profile + 950.0 * std::max(0.0, temperature - 20.0) +
                      350.0 * std::max(0.0, 12.0 - temperature) + 250.0 * noise.normal();
      if (weekend) demand -= 2400.0 * profile + 900.0;
      if (holiday) demand -= 1800.0 * profile + 700.0;
      const double solar = 9.0 * ghi;
      const double wind_power = 3500.0 * std::min(1.0, std::pow(std::max(0.0, wind - 3.0) / 9.0, 3.0));
      const double net = demand - solar - wind_power;

      char stamp[32];
      std::snprintf(stamp, sizeof stamp, "%04d-%02u-%02uT%02d:00", static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h);
      out << stamp;
      for (double s : shares) out << ',' << fmt(s * net);
      out << ',' << fmt(std::round(temperature * 100.0) / 100.0) << ',' << fmt(std::round(ghi * 10.0) / 10.0) << ','
          << fmt(std::round(wind * 100.0) / 100.0) << '\n';
    }
  }
}

void write_holidays(Date first, Date last, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (Date d : federal_holidays(first, last)) out << format_date(d) << '\n';
}

}  // namespace ppuc::synth
