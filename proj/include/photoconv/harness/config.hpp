// Run configuration: flat "key = value" text, '#' comments. Sweep axes are given
// as repeated keys ("sweep.A1 = 0", "sweep.A1 = 0.4", ...); their order of first
// appearance fixes the row order. Angles are in degrees.
#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "photoconv/params.hpp"
#include "photoconv/stability.hpp"
#include "photoconv/taxis.hpp"

namespace photoconv::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Output { base_state, neutral_curve, critical };

struct Axis {
  std::string name;
  std::vector<double> values;
};

struct Config {
  Params base;
  double kappa1 = kDefaultTaxisKappa1;
  std::vector<Axis> axes;
  std::vector<Output> outputs;  // empty: critical only
  StabilityOptions stability;
  CriticalSearchOptions search;
  int radiation_nodes = 256;
  int base_nodes = 512;
  int workers = 1;
};

namespace detail {

inline const std::map<std::string, double Params::*>& param_fields() {
  static const std::map<std::string, double Params::*> f = {
      {"S_c", &Params::S_c},     {"V_c", &Params::V_c}, {"tau_H", &Params::tau_H},
      {"omega", &Params::omega}, {"A1", &Params::A1},   {"I_D", &Params::I_D},
      {"I_t", &Params::I_t},     {"G_c", &Params::G_c}, {"R", &Params::R},
  };
  return f;
}

inline double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end) throw ConfigError("config: key '" + key + "': not a number: '" + v + "'");
  return x;
}

inline int to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != static_cast<int>(x)) throw ConfigError("config: key '" + key + "': not an integer: '" + v + "'");
  return static_cast<int>(x);
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

}  // namespace detail

/// Sets parameter `name` (a Params field, or theta_i in degrees) on p.
inline void set_param(Params& p, const std::string& name, double v) {
  if (name == "theta_i") {
    p.theta0 = v * std::numbers::pi / 180.0;
    return;
  }
  const auto& f = detail::param_fields();
  const auto it = f.find(name);
  if (it == f.end()) throw ConfigError("config: unknown parameter '" + name + "'");
  p.*(it->second) = v;
}

inline bool is_param(const std::string& name) { return name == "theta_i" || detail::param_fields().count(name); }

inline Config parse_config(std::istream& in) {
  Config c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config: line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq)), val = detail::trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("config: line " + std::to_string(lineno) + ": empty key or value");

    if (is_param(key)) {
      set_param(c.base, key, detail::to_double(key, val));
    } else if (key.rfind("sweep.", 0) == 0) {
      const std::string name = key.substr(6);
      if (!is_param(name)) throw ConfigError("config: unknown key '" + key + "'");
      auto it = std::find_if(c.axes.begin(), c.axes.end(), [&](const Axis& a) { return a.name == name; });
      if (it == c.axes.end()) it = c.axes.insert(c.axes.end(), Axis{name, {}});
      it->values.push_back(detail::to_double(key, val));
    } else if (key == "output") {
      if (val == "base-state") c.outputs.push_back(Output::base_state);
      else if (val == "neutral-curve") c.outputs.push_back(Output::neutral_curve);
      else if (val == "critical") c.outputs.push_back(Output::critical);
      else throw ConfigError("config: key 'output': unknown value '" + val + "'");
    } else if (key == "taxis.kappa1") {
      c.kappa1 = detail::to_double(key, val);
    } else if (key == "mesh") {
      c.stability.mesh = detail::to_int(key, val);
    } else if (key == "radiation_grid") {
      c.stability.radiation_grid = detail::to_int(key, val);
    } else if (key == "radiation_nodes") {
      c.radiation_nodes = detail::to_int(key, val);
    } else if (key == "base_nodes") {
      c.base_nodes = detail::to_int(key, val);
    } else if (key == "chebyshev") {
      c.stability.chebyshev = detail::to_int(key, val);
    } else if (key == "k_min") {
      c.search.k_min = detail::to_double(key, val);
    } else if (key == "k_max") {
      c.search.k_max = detail::to_double(key, val);
    } else if (key == "k_samples") {
      c.search.samples = detail::to_int(key, val);
    } else if (key == "workers") {
      c.workers = detail::to_int(key, val);
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  if (c.workers < 1) throw ConfigError("config: key 'workers' must be >= 1");
  if (c.stability.mesh < 17) throw ConfigError("config: key 'mesh' must be >= 17");
  if (c.search.samples < 8) throw ConfigError("config: key 'k_samples' must be >= 8");
  if (!(c.search.k_min > 0.0 && c.search.k_max > c.search.k_min))
    throw ConfigError("config: need 0 < k_min < k_max");
  return c;
}

inline Config parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in);
}

/// Every parameter tuple of the sweep, first axis varying slowest. No axes: the base only.
inline std::vector<Params> expand(const Config& c) {
  std::vector<Params> rows{c.base};
  for (const Axis& a : c.axes) {
    std::vector<Params> next;
    for (const Params& p : rows)
      for (double v : a.values) {
        Params q = p;
        set_param(q, a.name, v);
        next.push_back(q);
      }
    rows = std::move(next);
  }
  return rows;
}

}  // namespace photoconv::harness
