// The run pipeline behind the command-line tool: expands the sweep, solves each
// parameter tuple (base state, neutral curve and/or critical point) on a bounded
// worker pool, and writes the results in sweep order.
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "photoconv/basestate.hpp"
#include "photoconv/harness/cache.hpp"
#include "photoconv/harness/config.hpp"
#include "photoconv/harness/csv.hpp"
#include "photoconv/harness/svg.hpp"
#include "photoconv/stability.hpp"

namespace photoconv::harness {

struct RunOptions {
  std::filesystem::path out_dir = "out";
  bool use_cache = true;
  bool plot = false;
  std::optional<int> mesh;                // overrides the config
  std::optional<std::vector<Output>> outputs;  // overrides the config
  std::ostream* log = &std::clog;
};

struct RunSummary {
  std::vector<ResultRow> rows;
  int failures = 0;
  int cache_hits = 0, cache_misses = 0;
};

namespace detail {

inline bool wants(const std::vector<Output>& o, Output x) { return std::find(o.begin(), o.end(), x) != o.end(); }

inline std::string row_name(std::size_t i, const char* what, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "row%03zu_%s.%s", i, what, ext);
  return buf;
}

}  // namespace detail

/// Runs every tuple of the sweep; writes results.csv (and per-row files) under out_dir.
inline RunSummary run_sweep(const Config& cfg, const RunOptions& opt) {
  std::vector<Output> outputs = opt.outputs ? *opt.outputs : cfg.outputs;
  if (outputs.empty()) outputs = {Output::critical};
  StabilityOptions so = cfg.stability;
  if (opt.mesh) so.mesh = *opt.mesh;
  const std::vector<Params> params = expand(cfg);
  std::filesystem::create_directories(opt.out_dir);
  const RadiationCache cache(opt.use_cache ? opt.out_dir / "cache" : std::filesystem::path{});

  RunSummary sum;
  sum.rows.resize(params.size());
  std::mutex log_mutex;
  std::atomic<int> hits{0}, misses{0};
  auto log = [&](const std::string& s) {
    if (!opt.log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    *opt.log << s << '\n';
  };

  auto solve_row = [&](std::size_t i) {
    ResultRow& row = sum.rows[i];
    row.p = params[i];
    row.mesh = so.mesh;
    try {
      row.p.validate();
      bool hit = false;
      auto field = std::make_shared<RadiationField>(cache.get(row.p.radiation(), cfg.radiation_nodes, &hit));
      if (cache.enabled()) {
        (hit ? hits : misses)++;
        log("row " + std::to_string(i) + ": radiation cache " + (hit ? "hit" : "miss"));
      }
      auto taxis = default_taxis(row.p.G_c, cfg.kappa1);
      const BaseState base = solve_base_state(row.p, *field, *taxis, cfg.base_nodes);
      row.sublayer_z = base.sublayer.sublayer_z;
      row.WUR = base.sublayer.WUR;
      row.CDUR = base.sublayer.CDUR;
      if (detail::wants(outputs, Output::base_state)) {
        std::ofstream out(opt.out_dir / detail::row_name(i, "base", "csv"));
        write_schema(out, "photoconv-base-v1", "z,n_s,G_s,q_s,M_s");
        for (int j = 0; j < base.size(); ++j)
          out << fmt(base.z[j]) << ',' << fmt(base.n_s[j]) << ',' << fmt(base.G_s[j]) << ',' << fmt(base.q_s[j])
              << ',' << fmt(base.M_s[j]) << '\n';
        if (opt.plot) {
          std::ofstream svg(opt.out_dir / detail::row_name(i, "base", "svg"));
          write_svg(svg, {{"n_s", base.z, base.n_s}, {"G_s", base.z, base.G_s}}, "z", "profile");
        }
      }
      if (!detail::wants(outputs, Output::neutral_curve) && !detail::wants(outputs, Output::critical)) return;

      const StabilityProblem prob(row.p, field, taxis, so);
      if (detail::wants(outputs, Output::neutral_curve)) {
        const NeutralCurve curve =
            trace_neutral_curve(prob, cfg.search.k_min, cfg.search.k_max, cfg.search.samples);
        std::ofstream out(opt.out_dir / detail::row_name(i, "neutral", "csv"));
        write_schema(out, "photoconv-neutral-v1", "k,R,Im_gamma,branch,mode,status");
        Series st{"stationary", {}, {}}, os{"oscillatory", {}, {}};
        for (const auto& s : curve.samples) {
          out << fmt(s.k) << ',' << fmt(s.ok ? s.R : NAN) << ',' << fmt(s.ok ? s.Im_gamma : NAN) << ','
              << (s.ok ? branch_name(s.branch) : "") << ',' << (s.ok ? s.mode_index : 0) << ','
              << (s.ok ? std::string("ok") : csv_field("failed: " + s.error)) << '\n';
          const bool osc = s.ok && s.branch == Branch::oscillatory;
          st.x.push_back(s.k);
          st.y.push_back(s.ok && !osc ? s.R : NAN);
          os.x.push_back(s.k);
          os.y.push_back(osc ? s.R : NAN);
        }
        if (opt.plot) {
          std::ofstream svg(opt.out_dir / detail::row_name(i, "neutral", "svg"));
          write_svg(svg, {st, os}, "k", "R");
        }
      }
      if (detail::wants(outputs, Output::critical)) {
        const CriticalPoint c = find_critical(prob, cfg.search);
        row.k_c = c.k_c;
        row.lambda_c = c.lambda_c;
        row.R_c = c.R_c;
        row.Im_gamma = c.Im_gamma_c;
        row.branch = branch_name(c.branch);
        row.mode = c.mode_index;
      }
      log("row " + std::to_string(i) + ": done");
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + e.what();
      log("row " + std::to_string(i) + ": " + row.status);
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < params.size();) solve_row(i);
  };
  const int n_workers = std::min<int>(cfg.workers, static_cast<int>(params.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  {
    std::ofstream out(opt.out_dir / "results.csv");
    write_schema(out, kCriticalSchema, kCriticalColumns);
    for (const auto& r : sum.rows) write_row(out, r);
  }
  for (const auto& r : sum.rows)
    if (r.status != "ok") ++sum.failures;
  sum.cache_hits = hits;
  sum.cache_misses = misses;
  return sum;
}

}  // namespace photoconv::harness
