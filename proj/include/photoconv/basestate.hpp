// Equilibrium cell concentration in the self-shading suspension.
//
// dn/dz = V_c M(G(tau)) n and dtau/dz = -tau_H n are integrated downward from the
// lit surface, where tau(1) = 0 and the unknown surface concentration n(1) = s is
// chosen so that tau(0) = tau_H, which is the same as requiring unit mean
// concentration.
#pragma once

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "photoconv/params.hpp"
#include "photoconv/radiative.hpp"
#include "photoconv/taxis.hpp"

namespace photoconv {

class NoBracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SublayerKind {
  interior,             // G_s crosses G_c inside the layer
  top_accumulation,     // G_s < G_c everywhere: cells swim up to the surface
  bottom_accumulation,  // G_s > G_c everywhere: cells swim down to the floor
};

struct SublayerMetrics {
  double sublayer_z = 0.0;
  double WUR = 0.0;   // width of the unstable region below the sublayer
  double CDUR = 0.0;  // max concentration minus concentration at the floor
  SublayerKind kind = SublayerKind::interior;
  std::vector<double> crossings;  // every root of G_s - G_c, top first
};

struct BaseState {
  Params params;
  std::vector<double> z, n_s, tau, G_s, q_s, Gc_s, M_s, dMdG_s, d2MdG2_s;
  double surface_concentration = 0.0;
  int shooting_iterations = 0;
  SublayerMetrics sublayer;

  int size() const { return static_cast<int>(z.size()); }
  double h() const { return z[1] - z[0]; }  // spacing, for uniform grids
};

/// Composite Simpson on a uniform grid; an odd interval count closes with the 3/8 rule.
inline double simpson(std::span<const double> y, double h) {
  const int n = static_cast<int>(y.size()) - 1;
  if (n < 2) throw std::invalid_argument("simpson: need at least 3 samples");
  int simpson_end = n;
  double tail = 0.0;
  if (n % 2 == 1) {
    if (n < 3) throw std::invalid_argument("simpson: need at least 4 samples for an odd count");
    simpson_end = n - 3;
    tail = 3.0 * h / 8.0 * (y[n - 3] + 3.0 * y[n - 2] + 3.0 * y[n - 1] + y[n]);
  }
  double s = 0.0;
  for (int i = 0; i + 2 <= simpson_end; i += 2) s += y[i] + 4.0 * y[i + 1] + y[i + 2];
  return h / 3.0 * s + tail;
}

/// Sublayer location (highest crossing of G_c), WUR and CDUR.
inline SublayerMetrics sublayer_metrics(const BaseState& b, double G_c) {
  SublayerMetrics m;
  const int n = b.size();
  for (int j = n - 1; j > 0; --j) {
    const double hi = b.G_s[j] - G_c, lo = b.G_s[j - 1] - G_c;
    if (hi == 0.0) {
      m.crossings.push_back(b.z[j]);
    } else if ((hi > 0.0) != (lo > 0.0) && lo != 0.0) {
      const double t = hi / (hi - lo);
      m.crossings.push_back(b.z[j] + t * (b.z[j - 1] - b.z[j]));
    }
  }
  if (b.G_s[0] == G_c) m.crossings.push_back(b.z[0]);
  if (!m.crossings.empty()) {
    m.sublayer_z = m.crossings.front();
  } else if (b.G_s.front() < G_c) {
    m.kind = SublayerKind::top_accumulation;
    m.sublayer_z = 1.0;
  } else {
    m.kind = SublayerKind::bottom_accumulation;
    m.sublayer_z = 0.0;
  }
  m.WUR = m.sublayer_z;
  m.CDUR = *std::max_element(b.n_s.begin(), b.n_s.end()) - b.n_s.front();
  return m;
}

namespace detail {

struct ShotState {
  double n, tau;
};

// Integrates from z = 1 down to z = 0 with adaptive step-doubling RK4, recording the
// state at the output nodes (ascending, 0 to 1). Returns tau(0).
template <class Rhs>
double shoot(double s, const std::vector<double>& zs, double tol, Rhs&& rhs, std::vector<ShotState>* out) {
  auto rk4 = [&](const ShotState& y, double h) {
    const ShotState k1 = rhs(y);
    const ShotState k2 = rhs({y.n + 0.5 * h * k1.n, y.tau + 0.5 * h * k1.tau});
    const ShotState k3 = rhs({y.n + 0.5 * h * k2.n, y.tau + 0.5 * h * k2.tau});
    const ShotState k4 = rhs({y.n + h * k3.n, y.tau + h * k3.tau});
    return ShotState{y.n + h / 6.0 * (k1.n + 2 * k2.n + 2 * k3.n + k4.n),
                     y.tau + h / 6.0 * (k1.tau + 2 * k2.tau + 2 * k3.tau + k4.tau)};
  };
  const int nz = static_cast<int>(zs.size());
  ShotState y{s, 0.0};
  if (out) (*out)[nz - 1] = y;
  double h = -(zs[nz - 1] - zs[nz - 2]);  // preferred step, negative: marching downward
  for (int j = nz - 1; j > 0; --j) {
    double z = zs[j];
    const double target = zs[j - 1];
    const double dz = z - target;
    for (int guard = 0; z > target; ++guard) {
      if (guard > 100000) throw ConvergenceError("solve_base_state: step size collapsed");
      const bool last = z + h <= target + 1e-14 * dz;
      const double step = last ? target - z : h;
      const ShotState full = rk4(y, step);
      const ShotState half = rk4(rk4(y, 0.5 * step), 0.5 * step);
      const double err = std::max(std::abs(half.n - full.n) / std::max(1.0, std::abs(half.n)),
                                  std::abs(half.tau - full.tau) / std::max(1.0, std::abs(half.tau))) / 15.0;
      const double factor = err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 4.0;
      if (err <= tol) {
        y = {half.n + (half.n - full.n) / 15.0, half.tau + (half.tau - full.tau) / 15.0};
        z = last ? target : z + step;
        if (!last) h = step * std::min(4.0, factor);
      } else {
        h = step * std::max(0.1, factor);
      }
      h = std::max(h, -dz);
    }
    if (out) (*out)[j - 1] = y;
  }
  return y.tau;
}

}  // namespace detail

/// Solves the equilibrium profile at the given nodes, ascending from z = 0 to z = 1.
inline BaseState solve_base_state(const Params& p, const RadiationField& field, const TaxisFunction& taxis,
                                  const std::vector<double>& nodes) {
  p.validate();
  const int nz = static_cast<int>(nodes.size());
  if (nz < 64) throw std::invalid_argument("solve_base_state: need at least 64 nodes");
  if (nodes.front() != 0.0 || nodes.back() != 1.0 || !std::is_sorted(nodes.begin(), nodes.end()) ||
      std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end())
    throw std::invalid_argument("solve_base_state: nodes must increase strictly from 0 to 1");
  const RadiationParams& rp = field.params();
  const RadiationParams want = p.radiation();
  if (rp.tau_H != want.tau_H || rp.omega != want.omega || rp.A1 != want.A1 || rp.theta0 != want.theta0 ||
      rp.I_D != want.I_D || rp.I_t != want.I_t)
    throw std::invalid_argument("solve_base_state: radiation field was solved for different parameters");

  constexpr double tol = 1e-10;
  auto rhs = [&](const detail::ShotState& y) {
    const double G = std::max(field.G_clamped(y.tau), 1e-300);
    return detail::ShotState{p.V_c * taxis.value(G) * y.n, -p.tau_H * y.n};
  };
  auto residual = [&](double s) { return detail::shoot(s, nodes, tol, rhs, nullptr) - p.tau_H; };

  double lo = 1e-6, hi = 1e3;
  const double f_lo = residual(lo), f_hi = residual(hi);
  if (!(f_lo < 0.0 && f_hi > 0.0))
    throw NoBracketError("solve_base_state: shooting residual does not change sign on [1e-6, 1e3]");
  std::uintmax_t iters = 100;
  auto stop = [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max(1.0, std::abs(a)); };
  const auto bracket = boost::math::tools::toms748_solve(residual, lo, hi, f_lo, f_hi, stop, iters);
  if (iters >= 100) throw ConvergenceError("solve_base_state: shooting did not converge in 100 iterations");
  const double f1 = residual(bracket.first), f2 = residual(bracket.second);
  const double s = std::abs(f1) <= std::abs(f2) ? bracket.first : bracket.second;
  if (!(std::min(std::abs(f1), std::abs(f2)) <= 1e-10))
    throw ConvergenceError("solve_base_state: shooting residual above 1e-10");

  std::vector<detail::ShotState> path(nz);
  detail::shoot(s, nodes, tol, rhs, &path);

  BaseState b;
  b.params = p;
  b.surface_concentration = s;
  b.shooting_iterations = static_cast<int>(iters);
  const double mu0 = rp.mu0();
  for (auto* v : {&b.z, &b.n_s, &b.tau, &b.G_s, &b.q_s, &b.Gc_s, &b.M_s, &b.dMdG_s, &b.d2MdG2_s}) v->resize(nz);
  for (int j = 0; j < nz; ++j) {
    b.z[j] = nodes[j];
    b.n_s[j] = path[j].n;
    b.tau[j] = path[j].tau;
    const IntensityFlux gq = field.eval_unchecked(std::clamp(path[j].tau, 0.0, rp.tau_H));
    const double G = std::max(gq.G, 1e-300);
    b.G_s[j] = gq.G;
    b.q_s[j] = gq.q;
    b.Gc_s[j] = rp.I_t * std::exp(-path[j].tau / mu0);
    b.M_s[j] = taxis.value(G);
    b.dMdG_s[j] = taxis.derivative(G);
    b.d2MdG2_s[j] = taxis.second_derivative(G);
  }
  b.sublayer = sublayer_metrics(b, p.G_c);
  return b;
}

/// Uniform nodes z_j = j / (nz - 1).
inline BaseState solve_base_state(const Params& p, const RadiationField& field, const TaxisFunction& taxis,
                                  int nz = 512) {
  if (nz < 64) throw std::invalid_argument("solve_base_state: nz must be >= 64");
  std::vector<double> z(nz);
  for (int j = 0; j < nz; ++j) z[j] = static_cast<double>(j) / (nz - 1);
  z.back() = 1.0;
  return solve_base_state(p, field, taxis, z);
}

inline BaseState solve_base_state(const Params& p, const RadiationField& field, int nz = 512) {
  return solve_base_state(p, field, *default_taxis(p.G_c), nz);
}

}  // namespace photoconv
