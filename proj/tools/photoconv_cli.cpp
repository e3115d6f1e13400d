// photoconv: onset of phototactic bioconvection from the command line.
//
//   photoconv critical --config table.cfg --out results
//   photoconv sweep --config table.cfg --plot
//   photoconv selftest
#include <CLI11.hpp>

#include <iostream>

#include "photoconv/harness/config.hpp"
#include "photoconv/harness/run.hpp"
#include "photoconv/harness/selftest.hpp"

namespace h = photoconv::harness;

int main(int argc, char** argv) {
  CLI::App app{"Linear stability of phototactic suspensions in a scattering medium"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out";
  int mesh = 0;
  bool no_cache = false, plot = false;

  struct Sub {
    const char* name;
    const char* help;
    std::optional<std::vector<h::Output>> outputs;
  };
  const std::vector<Sub> subs = {
      {"base-state", "equilibrium profiles and sublayer metrics", std::vector{h::Output::base_state}},
      {"neutral-curve", "neutral curves R(k)", std::vector{h::Output::neutral_curve}},
      {"critical", "critical wavenumber and Rayleigh number", std::vector{h::Output::critical}},
      {"sweep", "everything listed under 'output' in the config", std::nullopt},
  };
  std::vector<CLI::App*> run_cmds;
  for (const auto& s : subs) {
    CLI::App* c = app.add_subcommand(s.name, s.help);
    c->add_option("--config", config_path, "configuration file (key = value)")->required();
    c->add_option("--out", out_dir, "output directory")->capture_default_str();
    c->add_option("--mesh", mesh, "collocation nodes (overrides the config)");
    c->add_flag("--no-cache", no_cache, "always solve the radiation field");
    c->add_flag("--plot", plot, "also write SVG plots");
    run_cmds.push_back(c);
  }
  CLI::App* selftest = app.add_subcommand("selftest", "run the quick invariant checks");

  CLI11_PARSE(app, argc, argv);

  if (selftest->parsed()) return h::selftest(std::cout) == 0 ? 0 : 2;

  h::Config cfg;
  try {
    cfg = h::load_config(config_path);
  } catch (const h::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  h::RunOptions opt;
  opt.out_dir = out_dir;
  opt.use_cache = !no_cache;
  opt.plot = plot;
  if (mesh > 0) opt.mesh = mesh;
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (run_cmds[i]->parsed()) opt.outputs = subs[i].outputs;

  try {
    const h::RunSummary s = h::run_sweep(cfg, opt);
    std::cerr << s.rows.size() << " rows, " << s.failures << " failed";
    if (opt.use_cache) std::cerr << "; radiation cache " << s.cache_hits << " hits, " << s.cache_misses << " misses";
    std::cerr << '\n';
    return s.failures == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
