// Perturbed radiation moments for a normal-mode disturbance of the concentration.
//
// The collimated part follows from the perturbed optical depth in closed form. The
// diffuse part solves, for every discrete ordinate (nu, phi),
//
//   dPsi/dz + [(i kappa + tau_H n_s) / nu] Psi = r(z),   kappa = l xi + m eta,
//
// with zero inflow, by marching cell by cell. The integrating factor is exact: its
// phase is Phi(z) = (i kappa z - tau(z)) / nu, so only the source is interpolated.
// Scattering couples the ordinates through G and S, handled by source iteration.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "photoconv/basestate.hpp"
#include "photoconv/radiative.hpp"
#include "photoconv/specfun.hpp"

namespace photoconv {

using cplx = std::complex<double>;
using CProfile = std::vector<cplx>;

struct PerturbationMoments {
  std::vector<double> z;
  CProfile Gc1, Gd1, P, Q, S;
  double l = 0.0, m = 0.0;
  int iterations = 0;
};

struct PerturbationOptions {
  int n_mu = 24;   // polar ordinates, split evenly between the hemispheres
  int n_phi = 16;  // azimuths; a multiple of 4 keeps quarter-turn symmetry exact
  double tol = 1e-9;
  int max_iter = 500;
};

/// Polar nodes: Gauss in t on each hemisphere with mu = expm1(L t) / expm1(L). Near a
/// wall, or wherever a beam has crossed little optical depth d, the intensity varies like
/// exp(-d / mu); the graded map resolves that for d down to ~1e-3 while staying close
/// to plain Gauss for smooth angular profiles. Splitting at nu = 0 keeps the wall jump
/// out of every panel.
struct Ordinates {
  std::vector<double> nu, w_nu;  // downward (nu < 0) first
  std::vector<double> phi;
  double w_phi = 0.0;
};

inline constexpr double kPolarGrading = 7.0;

inline Ordinates make_ordinates(int n_mu, int n_phi) {
  if (n_mu < 4 || n_mu % 2 != 0) throw std::invalid_argument("make_ordinates: n_mu must be even and >= 4");
  if (n_phi < 4) throw std::invalid_argument("make_ordinates: n_phi must be >= 4");
  const auto half = gauss_legendre(n_mu / 2, 0.0, 1.0);
  const double L = kPolarGrading, scale = std::expm1(L);
  std::vector<double> mu(half.size()), w(half.size());
  for (std::size_t i = 0; i < half.size(); ++i) {
    mu[i] = std::expm1(L * half.nodes[i]) / scale;
    w[i] = half.weights[i] * L * std::exp(L * half.nodes[i]) / scale;
  }
  Ordinates o;
  for (int i = n_mu / 2 - 1; i >= 0; --i) {
    o.nu.push_back(-mu[i]);
    o.w_nu.push_back(w[i]);
  }
  for (int i = 0; i < n_mu / 2; ++i) {
    o.nu.push_back(mu[i]);
    o.w_nu.push_back(w[i]);
  }
  for (int j = 0; j < n_phi; ++j) o.phi.push_back(2.0 * std::numbers::pi * (j + 0.5) / n_phi);
  o.w_phi = 2.0 * std::numbers::pi / n_phi;
  return o;
}

namespace detail {

// I_k(x) = int_0^1 exp(-x v) v^k dv for k = 0..3.
inline std::array<cplx, 4> exp_moments(cplx x) {
  std::array<cplx, 4> I{};
  if (std::abs(x) < 1.0) {
    for (int k = 0; k < 4; ++k) {
      cplx term = 1.0, sum = 1.0 / (k + 1.0);
      for (int n = 1; n < 40; ++n) {
        term *= -x / static_cast<double>(n);
        const cplx add = term / (n + k + 1.0);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
      }
      I[k] = sum;
    }
    return I;
  }
  const cplx e = std::exp(-x);
  I[0] = (1.0 - e) / x;
  for (int k = 1; k < 4; ++k) I[k] = (static_cast<double>(k) * I[k - 1] - e) / x;
  return I;
}

// Coefficients c[p][k] of the Lagrange basis l_p(v) = sum_k c[p][k] v^k on nodes v[0..3].
inline std::array<std::array<double, 4>, 4> lagrange_coefficients(const std::array<double, 4>& v) {
  std::array<std::array<double, 4>, 4> c{};
  for (int p = 0; p < 4; ++p) {
    std::array<double, 4> poly{1.0, 0.0, 0.0, 0.0};
    double denom = 1.0;
    int deg = 0;
    for (int q = 0; q < 4; ++q) {
      if (q == p) continue;
      for (int k = deg + 1; k > 0; --k) poly[k] = poly[k - 1] - v[q] * poly[k];
      poly[0] = -v[q] * poly[0];
      ++deg;
      denom *= v[p] - v[q];
    }
    for (int k = 0; k < 4; ++k) c[p][k] = poly[k] / denom;
  }
  return c;
}

}  // namespace detail

/// Cell propagators for one ordinate on a z grid (not necessarily uniform):
/// Psi_b = E Psi_a + sum_p W_p r_{s+p}, marching upward for nu > 0 and downward for nu < 0.
///
/// Within a cell the source is interpolated by a cubic through four nodes, in a variable
/// v in which the exponent is linear up to a correction exp(-delta) folded into the
/// interpolant. v is linear in z unless that leaves a large real delta (strong curvature
/// of tau over a grazing ordinate); then v is linear in tau, the real part of the exponent
/// is exact and delta is a pure phase, at the price of the Jacobian 1 / (tau_H n).
class OrdinateSweep {
 public:
  /// ext = tau_H n_s = -dtau/dz on the nodes.
  OrdinateSweep(const std::vector<double>& z, const std::vector<double>& tau, const std::vector<double>& ext, double nu,
                double kappa)
      : n_(static_cast<int>(z.size())), up_(nu > 0.0) {
    if (n_ < 4) throw std::invalid_argument("OrdinateSweep: need at least 4 nodes");
    std::vector<cplx> Phi(n_);
    for (int j = 0; j < n_; ++j) Phi[j] = cplx(-tau[j], kappa * z[j]) / nu;
    E_.resize(n_ - 1);
    W_.resize(n_ - 1);
    start_.resize(n_ - 1);
    for (int c = 0; c < n_ - 1; ++c) {
      // cell c joins nodes a -> b in marching order
      const int a = up_ ? c : n_ - 1 - c;
      const int b = up_ ? a + 1 : a - 1;
      const int s = std::clamp(std::min(a, b) - 1, 0, n_ - 4);
      const cplx D = Phi[b] - Phi[a];
      const auto I = detail::exp_moments(D);
      E_[c] = std::exp(-D);
      start_[c] = s;

      std::array<double, 4> v{}, jac{};
      std::array<cplx, 4> delta{};
      double worst = 0.0;
      for (int p = 0; p < 4; ++p) {
        v[p] = (z[b] - z[s + p]) / (z[b] - z[a]);
        jac[p] = z[b] - z[a];
        delta[p] = Phi[b] - Phi[s + p] - D * v[p];
        worst = std::max(worst, std::abs(delta[p].real()));
      }
      const double dtau = tau[a] - tau[b];
      if (worst > 0.5 && dtau != 0.0) {
        for (int p = 0; p < 4; ++p) {
          v[p] = (tau[s + p] - tau[b]) / dtau;
          jac[p] = dtau / ext[s + p];
          delta[p] = Phi[b] - Phi[s + p] - D * v[p];
        }
      }
      const auto coef = detail::lagrange_coefficients(v);
      for (int p = 0; p < 4; ++p) {
        cplx w = 0.0;
        for (int k = 0; k < 4; ++k) w += coef[p][k] * I[k];
        W_[c][p] = jac[p] * w * std::exp(-delta[p]);
      }
    }
  }

  bool upward() const { return up_; }

  /// Psi on all nodes for source r and inflow value at the entry wall.
  void sweep(const cplx* r, cplx inflow, cplx* psi) const {
    int a = up_ ? 0 : n_ - 1;
    psi[a] = inflow;
    for (int c = 0; c < n_ - 1; ++c) {
      const int b = up_ ? a + 1 : a - 1;
      const int s = start_[c];
      psi[b] = E_[c] * psi[a] + W_[c][0] * r[s] + W_[c][1] * r[s + 1] + W_[c][2] * r[s + 2] + W_[c][3] * r[s + 3];
      a = b;
    }
  }

 private:
  int n_;
  bool up_;
  std::vector<cplx> E_;
  std::vector<std::array<cplx, 4>> W_;
  std::vector<int> start_;
};

inline std::vector<double> extinction(const BaseState& base) {
  std::vector<double> e(base.n_s);
  for (double& v : e) v *= base.params.tau_H;
  return e;
}

/// Basic-state diffuse intensity L_s^d(z, nu) at the polar ordinates, from one sweep
/// over the converged radiation field (azimuthally symmetric, so one sweep per nu).
inline std::vector<std::vector<double>> diffuse_ordinate_table(const BaseState& base, const Ordinates& ord) {
  const Params& p = base.params;
  const int n = base.size();
  std::vector<std::vector<double>> table(ord.nu.size(), std::vector<double>(n));
  std::vector<cplx> r(n), psi(n);
  for (std::size_t i = 0; i < ord.nu.size(); ++i) {
    const double nu = ord.nu[i];
    const OrdinateSweep sw(base.z, base.tau, extinction(base), nu, 0.0);
    for (int j = 0; j < n; ++j)
      r[j] = p.omega * p.tau_H * base.n_s[j] / (4.0 * std::numbers::pi * nu) * (base.G_s[j] - p.A1 * nu * base.q_s[j]);
    const cplx inflow = nu < 0.0 ? p.I_D / std::numbers::pi : 0.0;
    sw.sweep(r.data(), inflow, psi.data());
    for (int j = 0; j < n; ++j) table[i][j] = psi[j].real();
  }
  return table;
}

/// Perturbed collimated intensity and its (vertical) flux for the integrated
/// concentration perturbation Theta(z) = int_1^z N.
inline std::pair<CProfile, CProfile> perturbed_collimated(const BaseState& base, const CProfile& Theta, const Params& p) {
  const int n = base.size();
  if (static_cast<int>(Theta.size()) != n) throw std::invalid_argument("perturbed_collimated: profile size mismatch");
  const double mu0 = std::cos(p.theta0);
  CProfile Gc1(n), Sc(n);
  for (int j = 0; j < n; ++j) {
    Gc1[j] = base.Gc_s[j] * p.tau_H / mu0 * Theta[j];
    Sc[j] = -mu0 * Gc1[j];
  }
  return {Gc1, Sc};
}

/// Reusable solver for one base state and wave vector (l, m): the ordinate
/// propagators are built once and shared by every source-iteration solve.
class PerturbationSolver {
 public:
  PerturbationSolver(const BaseState& base, double l, double m, PerturbationOptions opt = {})
      : base_(base), l_(l), m_(m), opt_(opt), ord_(make_ordinates(opt.n_mu, opt.n_phi)) {
    Ld_ = diffuse_ordinate_table(base, ord_);
    const std::vector<double> ext = extinction(base);
    for (std::size_t i = 0; i < ord_.nu.size(); ++i) {
      const double nu = ord_.nu[i], st = std::sqrt(1.0 - nu * nu);
      for (double phi : ord_.phi) {
        const double xi = st * std::cos(phi), eta = st * std::sin(phi);
        sweeps_.emplace_back(base.z, base.tau, ext, nu, l * xi + m * eta);
        xi_.push_back(xi);
        eta_.push_back(eta);
      }
    }
  }

  const Ordinates& ordinates() const { return ord_; }
  const std::vector<std::vector<double>>& diffuse_table() const { return Ld_; }

  /// Moments for (N, Theta) on the base grid. `warm`, if given, seeds the iteration.
  PerturbationMoments solve(const CProfile& N, const CProfile& Theta, const PerturbationMoments* warm = nullptr) const {
    const Params& p = base_.params;
    const int n = base_.size();
    if (static_cast<int>(N.size()) != n || static_cast<int>(Theta.size()) != n)
      throw std::invalid_argument("solve_perturbed_moments: profile size mismatch");
    PerturbationMoments out;
    out.z = base_.z;
    out.l = l_;
    out.m = m_;
    auto [Gc1, Sc] = perturbed_collimated(base_, Theta, p);
    out.Gc1 = Gc1;
    out.Gd1.assign(n, 0.0);
    out.P.assign(n, 0.0);
    out.Q.assign(n, 0.0);
    out.S = Sc;
    if (warm && static_cast<int>(warm->Gd1.size()) == n) {
      out.Gd1 = warm->Gd1;
      out.P = warm->P;
      out.Q = warm->Q;
      // warm->S holds its own collimated part; replace it by the current one
      for (int j = 0; j < n; ++j) out.S[j] = Sc[j] + (warm->S[j] + std::cos(p.theta0) * warm->Gc1[j]);
    }

    const double c = p.omega * p.tau_H / (4.0 * std::numbers::pi);
    CProfile A(n), B(n), r(n), psi(n), Gd(n), Pn(n), Qn(n), Sd(n);
    double prev_change = HUGE_VAL, relax = 1.0;
    const int n_phi = static_cast<int>(ord_.phi.size());
    for (int it = 1; it <= opt_.max_iter; ++it) {
      for (int j = 0; j < n; ++j) {
        const cplx G = out.Gc1[j] + out.Gd1[j];
        A[j] = c * (base_.n_s[j] * G + base_.G_s[j] * N[j]);
        B[j] = c * p.A1 * (base_.n_s[j] * out.S[j] - base_.q_s[j] * N[j]);
      }
      std::fill(Gd.begin(), Gd.end(), 0.0);
      std::fill(Pn.begin(), Pn.end(), 0.0);
      std::fill(Qn.begin(), Qn.end(), 0.0);
      std::fill(Sd.begin(), Sd.end(), 0.0);
      for (std::size_t i = 0; i < ord_.nu.size(); ++i) {
        const double nu = ord_.nu[i];
        const std::vector<double>& Ld = Ld_[i];
        for (int j = 0; j < n; ++j) r[j] = (A[j] + nu * B[j] - p.tau_H * Ld[j] * N[j]) / nu;
        for (int a = 0; a < n_phi; ++a) {
          const std::size_t k = i * n_phi + a;
          sweeps_[k].sweep(r.data(), 0.0, psi.data());
          const double w = ord_.w_nu[i] * ord_.w_phi;
          const double wx = w * xi_[k], wy = w * eta_[k], wz = w * nu;
          for (int j = 0; j < n; ++j) {
            Gd[j] += w * psi[j];
            Pn[j] += wx * psi[j];
            Qn[j] += wy * psi[j];
            Sd[j] += wz * psi[j];
          }
        }
      }
      double change = 0.0, scale = 1e-300;
      for (int j = 0; j < n; ++j) {
        const cplx S_new = Sc[j] + Sd[j];
        change = std::max({change, std::abs(Gd[j] - out.Gd1[j]), std::abs(S_new - out.S[j]), std::abs(Pn[j] - out.P[j]),
                           std::abs(Qn[j] - out.Q[j])});
        scale = std::max({scale, std::abs(Gd[j]), std::abs(S_new), std::abs(Pn[j]), std::abs(Qn[j]), std::abs(out.Gc1[j])});
        out.Gd1[j] += relax * (Gd[j] - out.Gd1[j]);
        out.P[j] += relax * (Pn[j] - out.P[j]);
        out.Q[j] += relax * (Qn[j] - out.Q[j]);
        out.S[j] += relax * (S_new - out.S[j]);
      }
      out.iterations = it;
      if (change <= opt_.tol * std::max(scale, 1e-12) || scale <= 1e-300) return out;
      if (change > prev_change) relax = 0.7;
      prev_change = change;
    }
    throw ConvergenceError("solve_perturbed_moments: source iteration did not converge");
  }

 private:
  const BaseState& base_;
  double l_, m_;
  PerturbationOptions opt_;
  Ordinates ord_;
  std::vector<std::vector<double>> Ld_;
  std::vector<OrdinateSweep> sweeps_;
  std::vector<double> xi_, eta_;
};

inline PerturbationMoments solve_perturbed_moments(const BaseState& base, const CProfile& N, const CProfile& Theta,
                                                   double l, double m, PerturbationOptions opt = {}) {
  return PerturbationSolver(base, l, m, opt).solve(N, Theta);
}

}  // namespace photoconv
