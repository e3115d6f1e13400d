// On-disk cache of radiation fields. The field depends only on the six radiation
// parameters, so those (at 12 significant digits) form the key. Each entry is a text
// file: the key line, then "tau G q" per node written with round-trip precision, so a
// reloaded field is bit-identical to the one that was stored.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "photoconv/radiative.hpp"

namespace photoconv::harness {

inline std::string cache_key(const RadiationParams& p) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "tau_H=%.12g;omega=%.12g;A1=%.12g;theta0=%.12g;I_D=%.12g;I_t=%.12g", p.tau_H,
                p.omega, p.A1, p.theta0, p.I_D, p.I_t);
  return buf;
}

/// Inverse of cache_key (values at the key's precision).
inline RadiationParams parse_cache_key(const std::string& key) {
  RadiationParams p;
  double* slots[] = {&p.tau_H, &p.omega, &p.A1, &p.theta0, &p.I_D, &p.I_t};
  const char* names[] = {"tau_H", "omega", "A1", "theta0", "I_D", "I_t"};
  std::istringstream in(key);
  std::string item;
  int i = 0;
  while (std::getline(in, item, ';')) {
    const auto eq = item.find('=');
    if (i >= 6 || eq == std::string::npos || item.substr(0, eq) != names[i])
      throw std::invalid_argument("parse_cache_key: malformed key '" + key + "'");
    *slots[i++] = std::stod(item.substr(eq + 1));
  }
  if (i != 6) throw std::invalid_argument("parse_cache_key: malformed key '" + key + "'");
  return p;
}

class RadiationCache {
 public:
  /// dir empty: caching disabled.
  explicit RadiationCache(std::filesystem::path dir = {}) : dir_(std::move(dir)) {}

  bool enabled() const { return !dir_.empty(); }

  /// Cached field for p at n_nodes, solving and storing it on a miss. hit reports which.
  RadiationField get(const RadiationParams& p, int n_nodes, bool* hit = nullptr) const {
    if (hit) *hit = false;
    if (!enabled()) return solve_radiation(p, n_nodes);
    const std::string key = cache_key(p) + ";n=" + std::to_string(n_nodes);
    const auto path = dir_ / file_name(key);
    if (auto f = load(path, key, p)) {
      if (hit) *hit = true;
      return *f;
    }
    RadiationField f = solve_radiation(p, n_nodes);
    store(path, key, f);
    return f;
  }

 private:
  static std::string file_name(const std::string& key) {
    std::ostringstream s;
    s << "rad-" << std::hex << std::setw(16) << std::setfill('0') << std::hash<std::string>{}(key) << ".txt";
    return s.str();
  }

  static std::optional<RadiationField> load(const std::filesystem::path& path, const std::string& key,
                                            const RadiationParams& p) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string first;
    if (!std::getline(in, first) || first != "# " + key) return std::nullopt;  // hash collision or stale
    std::vector<double> G, q;
    double t, g, qq;
    while (in >> t >> g >> qq) {
      G.push_back(g);
      q.push_back(qq);
    }
    if (G.size() < 5) return std::nullopt;
    return RadiationField(p, std::move(G), std::move(q));
  }

  static void store(const std::filesystem::path& path, const std::string& key, const RadiationField& f) {
    std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
      std::ofstream out(tmp);
      out << "# " << key << '\n' << std::setprecision(17);
      for (int i = 0; i < f.size(); ++i) out << f.tau_grid()[i] << ' ' << f.G()[i] << ' ' << f.q()[i] << '\n';
      if (!out) return;  // caching is best effort
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) std::filesystem::remove(tmp, ec);
  }

  std::filesystem::path dir_;
};

}  // namespace photoconv::harness
