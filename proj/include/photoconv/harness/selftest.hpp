// Quick invariant checks for the command-line "selftest": a few seconds, one line each.
#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "photoconv/basestate.hpp"
#include "photoconv/radiative.hpp"
#include "photoconv/specfun.hpp"
#include "photoconv/stability.hpp"

namespace photoconv::harness {

/// Returns the number of failed checks.
inline int selftest(std::ostream& out) {
  struct Check {
    std::string name;
    std::function<bool(std::string&)> run;
  };
  const std::vector<Check> checks = {
      {"expint recurrence",
       [](std::string& msg) {
         double worst = 0.0;
         for (double x : {0.1, 0.7, 1.0, 3.0, 12.0})
           for (int n = 1; n <= 4; ++n)
             worst = std::max(worst, std::abs(n * expint(n + 1, x) - (std::exp(-x) - x * expint(n, x))) /
                                         std::max(1e-300, expint(n + 1, x)));
         msg = "max relative defect " + std::to_string(worst);
         return worst < 1e-12;
       }},
      {"pure absorption closed form",
       [](std::string& msg) {
         RadiationParams p{1.0, 0.0, 0.0, 0.7, 0.48, 1.0};
         const RadiationField f = solve_radiation(p, 128);
         double worst = 0.0;
         for (double tau : {0.0, 0.13, 0.5, 0.91}) {
           const double G = std::exp(-tau / p.mu0()) + 2.0 * p.I_D * expint(2, tau);
           worst = std::max(worst, std::abs(eval_field(f, tau).G - G));
         }
         msg = "max error " + std::to_string(worst);
         return worst < 1e-8;
       }},
      {"base state conserves cells",
       [](std::string& msg) {
         Params p;
         const BaseState b = solve_base_state(p, solve_radiation(p.radiation(), 128), 257);
         const double total = simpson(b.n_s, b.h());
         msg = "integral " + std::to_string(total);
         return std::abs(total - 1.0) < 1e-8;
       }},
      {"neutral solve boundary conditions",
       [](std::string& msg) {
         Params p;
         StabilityOptions o;
         o.mesh = 33;
         o.radiation_grid = 129;
         o.chebyshev = 32;
         const StabilityProblem prob(p, o);
         const EigenSolution s = neutral_solve(prob, 3.0, Branch::stationary);
         msg = "R = " + std::to_string(s.R) + ", boundary residual " + std::to_string(s.bc_residual);
         return s.R > 0.0 && s.bc_residual <= 1e-8;
       }},
  };
  int failed = 0;
  for (const auto& c : checks) {
    std::string msg;
    bool ok = false;
    try {
      ok = c.run(msg);
    } catch (const std::exception& e) {
      msg = e.what();
    }
    out << (ok ? "PASS " : "FAIL ") << c.name << ": " << msg << '\n';
    if (!ok) ++failed;
  }
  return failed;
}

}  // namespace photoconv::harness
