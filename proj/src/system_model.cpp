#include "ppuc/system_model.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "ppuc/error.hpp"

namespace ppuc {

namespace {

using nlohmann::json;

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) {
    throw ParseError(where + ": missing key '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T optional(const json& obj, const char* key, T fallback, const std::string& where) {
  return obj.contains(key) ? required<T>(obj, key, where) : fallback;
}

std::string as_id(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(where + ": id must be a string or integer");
}

Generator parse_generator(const json& g, std::size_t pos) {
  const std::string where = "generators[" + std::to_string(pos) + "]";
  if (!g.is_object()) throw ParseError(where + ": expected an object");
  Generator gen;
  gen.id = as_id(g.at("id"), where);
  const std::string w = "generator '" + gen.id + "'";
  if (!g.contains("bus")) throw ParseError(w + ": missing key 'bus'");
  gen.bus = as_id(g.at("bus"), w);
  gen.p_min = required<double>(g, "p_min", w);
  gen.p_max = required<double>(g, "p_max", w);
  gen.ramp_up = required<double>(g, "ramp_up", w);
  gen.ramp_down = required<double>(g, "ramp_down", w);
  gen.min_up = required<int>(g, "min_up", w);
  gen.min_down = required<int>(g, "min_down", w);
  gen.no_load_cost = required<double>(g, "no_load_cost", w);
  gen.startup_cost = required<double>(g, "startup_cost", w);
  gen.shutdown_cost = optional<double>(g, "shutdown_cost", 0.0, w);
  gen.initial_on_hours = optional<int>(g, "initial_on_hours", 0, w);
  gen.initial_off_hours = optional<int>(g, "initial_off_hours", 0, w);
  gen.initial_power = optional<double>(g, "initial_power", 0.0, w);
  const auto& segs = g.contains("cost_segments") ? g.at("cost_segments") : json::array();
  if (!segs.is_array()) throw ParseError(w + ": cost_segments must be an array");
  for (const auto& s : segs) {
    gen.cost_segments.push_back({required<double>(s, "mw", w), required<double>(s, "price", w)});
  }
  return gen;
}

[[noreturn]] void invalid(const std::string& what, const std::string& id) {
  throw ValidationError(what + " (" + id + ")");
}

}  // namespace

double Generator::min_output_price() const {
  return cost_segments.empty() ? 0.0 : cost_segments.front().price;
}

double Generator::max_segment_price() const {
  double best = 0.0;
  for (const auto& s : cost_segments) best = std::max(best, s.price);
  return best;
}

std::size_t SystemModel::bus_index(const std::string& id) const {
  for (std::size_t b = 0; b < buses.size(); ++b) {
    if (buses[b].id == id) return b;
  }
  throw ValidationError("unknown bus '" + id + "'");
}

std::vector<std::size_t> SystemModel::generator_buses() const {
  std::vector<std::size_t> out;
  out.reserve(generators.size());
  for (const auto& g : generators) out.push_back(bus_index(g.bus));
  return out;
}

void validate(const SystemModel& system) {
  if (system.buses.empty()) throw ValidationError("system has no buses");
  if (system.generators.empty()) throw ValidationError("system has no generators");
  if (system.horizon < 1) throw ValidationError("horizon must be a positive number of hours");

  std::unordered_set<std::string> bus_ids;
  for (const auto& b : system.buses) {
    if (!bus_ids.insert(b.id).second) invalid("duplicate bus id", "bus " + b.id);
  }

  std::unordered_set<std::string> gen_ids;
  double max_price = 0.0;
  for (const auto& g : system.generators) {
    const std::string who = "generator " + g.id;
    if (!gen_ids.insert(g.id).second) invalid("duplicate generator id", who);
    if (!bus_ids.contains(g.bus)) invalid("generator references unknown bus '" + g.bus + "'", who);
    if (!(g.p_min >= 0.0 && g.p_min <= g.p_max)) invalid("requires 0 <= p_min <= p_max", who);
    if (!(g.ramp_up > 0.0 && g.ramp_down > 0.0)) invalid("ramp rates must be positive", who);
    if (g.min_up < 1 || g.min_down < 1) invalid("min_up/min_down must be positive integers", who);
    if (g.no_load_cost < 0.0 || g.startup_cost < 0.0 || g.shutdown_cost < 0.0) {
      invalid("commitment costs must be nonnegative", who);
    }
    if (g.cost_segments.empty()) invalid("at least one cost segment is required", who);
    double width = 0.0;
    for (std::size_t k = 0; k < g.cost_segments.size(); ++k) {
      const auto& s = g.cost_segments[k];
      if (s.mw < 0.0) invalid("segment widths must be nonnegative", who);
      if (k > 0 && s.price < g.cost_segments[k - 1].price) {
        invalid("segment prices must be nondecreasing (convex cost)", who);
      }
      width += s.mw;
    }
    const double span = g.p_max - g.p_min;
    if (std::abs(width - span) > 1e-6 * std::max(1.0, span)) {
      invalid("segment widths must sum to p_max - p_min", who);
    }
    if ((g.initial_on_hours > 0) == (g.initial_off_hours > 0) || g.initial_on_hours < 0 ||
        g.initial_off_hours < 0) {
      invalid("exactly one of initial_on_hours/initial_off_hours must be positive", who);
    }
    if (g.initially_on()) {
      if (g.initial_power < g.p_min || g.initial_power > g.p_max) {
        invalid("initial_power must lie in [p_min, p_max] for a unit that is on", who);
      }
    } else if (g.initial_power != 0.0) {
      invalid("initial_power must be 0 for a unit that is off", who);
    }
    max_price = std::max(max_price, g.max_segment_price());
  }

  std::unordered_set<std::string> line_ids;
  for (const auto& l : system.lines) {
    const std::string who = "line " + l.id;
    if (!line_ids.insert(l.id).second) invalid("duplicate line id", who);
    if (!(l.flow_limit > 0.0)) invalid("flow_limit must be positive", who);
    if (static_cast<std::size_t>(l.isf.size()) != system.buses.size()) {
      invalid("isf length must equal the number of buses", who);
    }
  }

  if (!(system.voll > max_price)) {
    invalid("voll must exceed every segment price", "voll");
  }
  if (!(system.overgen_penalty > max_price)) {
    invalid("overgen_penalty must exceed every segment price", "overgen_penalty");
  }
}

SystemModel parse_system(const json& doc) {
  if (!doc.is_object()) throw ParseError("system document must be a JSON object");
  SystemModel sys;
  sys.name = optional<std::string>(doc, "name", "", "system");
  sys.voll = required<double>(doc, "voll", "system");
  sys.overgen_penalty = required<double>(doc, "overgen_penalty", "system");
  sys.horizon = optional<int>(doc, "horizon", 24, "system");

  const auto& buses = doc.contains("buses") ? doc.at("buses") : json();
  if (!buses.is_array()) throw ParseError("system: 'buses' must be an array");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string where = "buses[" + std::to_string(i) + "]";
    if (!buses[i].contains("id")) throw ParseError(where + ": missing key 'id'");
    sys.buses.push_back({as_id(buses[i].at("id"), where)});
  }

  const auto& gens = doc.contains("generators") ? doc.at("generators") : json();
  if (!gens.is_array()) throw ParseError("system: 'generators' must be an array");
  for (std::size_t i = 0; i < gens.size(); ++i) sys.generators.push_back(parse_generator(gens[i], i));

  if (doc.contains("lines")) {
    const auto& lines = doc.at("lines");
    if (!lines.is_array()) throw ParseError("system: 'lines' must be an array");
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const std::string where = "lines[" + std::to_string(i) + "]";
      TransmissionLine line;
      line.id = as_id(lines[i].at("id"), where);
      line.flow_limit = required<double>(lines[i], "flow_limit", where);
      const auto isf = required<std::vector<double>>(lines[i], "isf", where);
      line.isf = Eigen::Map<const Eigen::VectorXd>(isf.data(), static_cast<Eigen::Index>(isf.size()));
      sys.lines.push_back(std::move(line));
    }
  }

  validate(sys);
  return sys;
}

SystemModel load_system(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open system file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
  return parse_system(doc);
}

nlohmann::json to_json(const SystemModel& system) {
  json doc;
  doc["name"] = system.name;
  doc["horizon"] = system.horizon;
  doc["voll"] = system.voll;
  doc["overgen_penalty"] = system.overgen_penalty;
  doc["buses"] = json::array();
  for (const auto& b : system.buses) doc["buses"].push_back({{"id", b.id}});
  doc["generators"] = json::array();
  for (const auto& g : system.generators) {
    json segs = json::array();
    for (const auto& s : g.cost_segments) segs.push_back({{"mw", s.mw}, {"price", s.price}});
    doc["generators"].push_back({{"id", g.id},
                                 {"bus", g.bus},
                                 {"p_min", g.p_min},
                                 {"p_max", g.p_max},
                                 {"ramp_up", g.ramp_up},
                                 {"ramp_down", g.ramp_down},
                                 {"min_up", g.min_up},
                                 {"min_down", g.min_down},
                                 {"no_load_cost", g.no_load_cost},
                                 {"startup_cost", g.startup_cost},
                                 {"shutdown_cost", g.shutdown_cost},
                                 {"cost_segments", segs},
                                 {"initial_on_hours", g.initial_on_hours},
                                 {"initial_off_hours", g.initial_off_hours},
                                 {"initial_power", g.initial_power}});
  }
  doc["lines"] = json::array();
  for (const auto& l : system.lines) {
    doc["lines"].push_back({{"id", l.id},
                            {"flow_limit", l.flow_limit},
                            {"isf", std::vector<double>(l.isf.data(), l.isf.data() + l.isf.size())}});
  }
  return doc;
}

double aggregate_capacity(const SystemModel& system) {
  return std::accumulate(system.generators.begin(), system.generators.end(), 0.0,
                         [](double acc, const Generator& g) { return acc + g.p_max; });
}

}  // namespace ppuc
