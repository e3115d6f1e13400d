// Linear stability of the equilibrium suspension to normal modes
// exp(gamma t + i(l x + m y)) with k^2 = l^2 + m^2.
//
// The concentration equation is solved in flux form. With N = Theta' and
//   F = N' - V_c M_s N - V_c n_s M'(G) (Gc1 + Gd1)
// (the vertical cell flux perturbation), the system is first order in
// (W, W', W'', W''', Theta, N, F):
//
//   W'''' = (gamma/S_c + 2k^2) W'' - k^2 (gamma/S_c + k^2) W - R k^2 N
//   Theta' = N
//   N' = F + V_c M_s N + V_c n_s M' (G_c tau_H Theta / mu0 + Gd1)
//   F' = (gamma + k^2) N + (dn_s/dz) W - i (V_c n_s M_s / q_s)(l P + m Q)
//
// with W = W' = F = 0 on both walls and Theta(1) = 0. This never differentiates the
// base state, whose intensity has logarithmic derivatives at the lit surface. The
// diffuse and horizontal-flux perturbations (Gd1, P, Q) depend on the eigenfunction
// through the radiative transfer problem, which makes the system nonlocal.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "photoconv/basestate.hpp"
#include "photoconv/bvp.hpp"
#include "photoconv/chebyshev.hpp"
#include "photoconv/interp.hpp"
#include "photoconv/perturbation.hpp"

namespace photoconv {

inline constexpr double kOscillationThreshold = 1e-3;

class NoNeutralModeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Branch { stationary, oscillatory };

inline const char* branch_name(Branch b) { return b == Branch::stationary ? "stationary" : "oscillatory"; }

struct StabilityOptions {
  int mesh = 513;             // collocation nodes
  bool wall_grading = true;   // cluster nodes at the walls (see MeshMap)
  int radiation_grid = 2049;  // minimum nodes of the base-state / radiation grid
  int chebyshev = 64;         // seed model intervals
  double wave_angle = 0.0;   // direction of (l, m)
  double normalization = 1.0;  // N(0)
  double newton_tol = 1e-10;  // scaled residual
  double eigen_tol = 1e-10;   // relative change of the eigenvalue over the last step
  int max_newton = 50;
  PerturbationOptions radiation{24, 16, 1e-12, 500};
};

struct StabilityCoefficients {
  std::vector<double> z;
  CProfile Lambda0;
  std::vector<double> Lambda1, Lambda2, Lambda3;
};

using StateVector = std::array<cplx, 7>;  // W, W', W'', W''', Theta, N, F

struct EigenSolution {
  double k = 0.0, R = 0.0;
  cplx gamma;
  std::vector<double> z;  // mesh nodes
  CProfile W, Theta, N, F;
  std::vector<StateVector> state, state_mid;  // full state at nodes and midpoints
  int mode_index = 1;
  bool oscillatory = false;
  int iterations = 0;  // Newton steps
  double bc_residual = 0.0;
  PerturbationMoments moments;  // on the base grid, for the final eigenfunction
};

/// Mesh coordinate s in [0, 1], uniform, mapped to z. The graded map
/// z = s - sin(2 pi s) / (2 pi) has z ~ s^3 at both walls. The diffuse intensity behaves
/// like tau ln tau next to a wall, which caps a uniform-z scheme near second order;
/// in s the same terms are smooth enough for the full fourth order.
struct MeshMap {
  bool graded = true;

  double z(double s) const {
    if (!graded) return s;
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s - std::sin(2.0 * std::numbers::pi * s) / (2.0 * std::numbers::pi);
  }
  double dzds(double s) const { return graded ? 1.0 - std::cos(2.0 * std::numbers::pi * s) : 1.0; }
  double s(double z) const {
    if (!graded || z <= 0.0 || z >= 1.0) return std::clamp(z, 0.0, 1.0);
    double lo = 0.0, hi = 1.0;  // z(s) is increasing
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (this->z(mid) < z ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
};

/// Radiation perturbations (diffuse intensity Gd1 and l P + m Q) produced by each
/// Chebyshev cardinal function of Theta (with N = Theta'), tabulated on a coarse
/// uniform grid in the mesh coordinate s.
struct RadiationTable {
  double k = 0.0;
  int N = 0;                       // Chebyshev intervals
  double hs = 0.0;                 // coarse spacing in s
  std::vector<CProfile> Gd, PQ;    // [cardinal][coarse node]

  // Value of cardinal j's response at s, by cubic interpolation.
  std::pair<cplx, cplx> at(int j, double s) const {
    const int nc = static_cast<int>(Gd[j].size());
    const double x = std::clamp(s / hs, 0.0, nc - 1.0);
    const int c = std::clamp(static_cast<int>(x) - 1, 0, nc - 4);
    cplx g = 0.0, q = 0.0;
    for (int a = 0; a < 4; ++a) {
      double w = 1.0;
      for (int b = 0; b < 4; ++b)
        if (b != a) w *= (x - (c + b)) / static_cast<double>(a - b);
      g += w * Gd[j][c + a];
      q += w * PQ[j][c + a];
    }
    return {g, q};
  }
};

/// Equilibrium data and coefficient profiles shared by every solve at fixed Params.
class StabilityProblem {
 public:
  StabilityProblem(const Params& p, std::shared_ptr<const RadiationField> field,
                   std::shared_ptr<const TaxisFunction> taxis, StabilityOptions opt = {})
      : p_(p), field_(std::move(field)), taxis_(std::move(taxis)), opt_(opt), map_{opt.wall_grading} {
    p_.validate();
    if (opt_.mesh < 17) throw std::invalid_argument("StabilityProblem: mesh must be >= 17");
    // The base state and radiation perturbations live on a fixed grid that contains every
    // mesh node and midpoint, so refining the mesh changes only the difference scheme.
    const int half = 2 * (opt_.mesh - 1);
    const int target = std::max(opt_.radiation_grid - 1, half);
    stride_ = (target + half - 1) / half;
    const int nf = half * stride_ + 1;
    std::vector<double> zb(nf);
    jac_.resize(nf);
    for (int j = 0; j < nf; ++j) {
      const double sj = static_cast<double>(j) / (nf - 1);
      zb[j] = map_.z(sj);
      jac_[j] = map_.dzds(sj);
    }
    base_ = solve_base_state(p_, *field_, *taxis_, zb);
    const double mu0 = std::cos(p_.theta0);
    a3_.resize(nf);
    beta_.resize(nf);
    g_.resize(nf);
    cs_.resize(nf);
    dn_.resize(nf);
    for (int j = 0; j < nf; ++j) {
      a3_[j] = p_.V_c * base_.M_s[j];
      g_[j] = p_.V_c * base_.n_s[j] * base_.dMdG_s[j];
      beta_[j] = g_[j] * base_.Gc_s[j] * p_.tau_H / mu0;
      if (!(base_.q_s[j] > 1e-12)) throw std::domain_error("StabilityProblem: degenerate illumination (q_s < 1e-12)");
      cs_[j] = p_.V_c * base_.n_s[j] * base_.M_s[j] / base_.q_s[j];
      dn_[j] = p_.V_c * base_.M_s[j] * base_.n_s[j];
    }
  }

  StabilityProblem(const Params& p, StabilityOptions opt = {})
      : StabilityProblem(p, std::make_shared<RadiationField>(solve_radiation(p.radiation(), 256)),
                         default_taxis(p.G_c), opt) {}

  const Params& params() const { return p_; }
  const StabilityOptions& options() const { return opt_; }
  const BaseState& base() const { return base_; }
  const RadiationField& field() const { return *field_; }
  const MeshMap& map() const { return map_; }
  int mesh() const { return opt_.mesh; }
  // Under normal incidence the stationary modes are real, up to an imaginary horizontal
  // flux; oblique light makes them genuinely complex even at real gamma.
  bool real_modes() const { return p_.theta0 == 0.0; }
  double h() const { return 1.0 / (opt_.mesh - 1); }  // in s
  double z_node(int i) const { return base_.z[base_index(2 * i)]; }
  double z_mid(int i) const { return base_.z[base_index(2 * i + 1)]; }
  double dzds(int j) const { return jac_[base_index(j)]; }
  // Base-grid index of half-mesh point j (mesh node i is j = 2i, midpoints are odd).
  int base_index(int j) const { return j * stride_; }

  double a3(int j) const { return a3_[base_index(j)]; }
  double beta(int j) const { return beta_[base_index(j)]; }
  double g(int j) const { return g_[base_index(j)]; }
  double cs(int j) const { return cs_[base_index(j)]; }
  double dn(int j) const { return dn_[base_index(j)]; }

  /// Seed model at wavenumber k, with the nonlocal radiation terms from table when given.
  ChebyshevModel chebyshev_model(double k, const RadiationTable* table = nullptr) const {
    const int N = opt_.chebyshev;
    const auto zc = chebyshev_nodes(N);
    const double hs = 1.0 / (base_.size() - 1);
    auto sample = [&](const std::vector<double>& f) {
      const UniformCubic F(0.0, hs, f);
      std::vector<double> out;
      for (double z : zc) out.push_back(F(map_.s(z)));
      return out;
    };
    LocalCoefficients c{sample(a3_), sample(beta_), sample(dn_), sample(g_), sample(cs_)};
    if (!table) return ChebyshevModel(N, p_.S_c, k, std::move(c));
    if (table->N != N || table->k != k) throw std::invalid_argument("chebyshev_model: table does not match");
    RadiationResponse r{CMatrix(N + 1, N + 1), CMatrix(N + 1, N + 1)};
    for (int j = 0; j <= N; ++j)
      for (int i = 0; i <= N; ++i) std::tie(r.G(i, j), r.PQ(i, j)) = table->at(j, map_.s(zc[i]));
    return ChebyshevModel(N, p_.S_c, k, std::move(c), std::move(r));
  }

  /// Radiation response at wavenumber k: one radiation solve per Chebyshev cardinal
  /// function on a coarse copy of the grid.
  RadiationTable radiation_table(double k) const {
    const int N = opt_.chebyshev, nc = kCoarseNodes;
    const auto zc = chebyshev_nodes(N);
    std::vector<double> zb(nc);
    for (int j = 0; j < nc; ++j) zb[j] = map_.z(static_cast<double>(j) / (nc - 1));
    const BaseState coarse = solve_base_state(p_, *field_, *taxis_, zb);
    const double l = k * std::cos(opt_.wave_angle), m = k * std::sin(opt_.wave_angle);
    PerturbationOptions po = opt_.radiation;
    po.tol = std::max(po.tol, 1e-10);
    const PerturbationSolver rad(coarse, l, m, po);
    const Matrix D = chebyshev_derivative(N);
    RadiationTable t;
    t.k = k;
    t.N = N;
    t.hs = 1.0 / (nc - 1);
    std::vector<double> e(N + 1), de(N + 1);
    CProfile Theta(nc), Nb(nc);
    for (int j = 0; j <= N; ++j) {
      std::fill(e.begin(), e.end(), 0.0);
      e[j] = 1.0;
      for (int i = 0; i <= N; ++i) de[i] = D(i, j);
      for (int b = 0; b < nc; ++b) {
        Theta[b] = chebyshev_interpolate(e, zb[b]);
        Nb[b] = chebyshev_interpolate(de, zb[b]);
      }
      const PerturbationMoments mom = rad.solve(Nb, Theta);
      CProfile pq(nc);
      for (int b = 0; b < nc; ++b) pq[b] = l * mom.P[b] + m * mom.Q[b];
      t.Gd.push_back(mom.Gd1);
      t.PQ.push_back(std::move(pq));
    }
    return t;
  }

 private:
  Params p_;
  std::shared_ptr<const RadiationField> field_;
  std::shared_ptr<const TaxisFunction> taxis_;
  StabilityOptions opt_;
  MeshMap map_;
  BaseState base_;
  int stride_ = 1;
  std::vector<double> jac_;
  std::vector<double> a3_, beta_, g_, cs_, dn_;

  static constexpr int kCoarseNodes = 257;
};

/// Number of sign changes of Re W on (0, 1), plus one.
inline int classify_mode(const EigenSolution& sol) {
  double scale = 0.0;
  for (const auto& w : sol.W) scale = std::max(scale, std::abs(w.real()));
  int changes = 0, last = 0;
  for (const auto& w : sol.W) {
    const double v = w.real();
    if (std::abs(v) <= 1e-8 * scale) continue;
    const int s = v > 0.0 ? 1 : -1;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes + 1;
}

namespace detail {

// First-derivative weights at x0 for five samples at x (Fornberg's recursion).
inline std::array<double, 5> derivative_weights(double x0, const double* x) {
  constexpr int n = 5;
  double c[n][2] = {};
  c[0][0] = 1.0;
  double c1 = 1.0, c4 = x[0] - x0;
  for (int i = 1; i < n; ++i) {
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        c[i][1] = c1 * (c[i - 1][0] - c5 * c[i - 1][1]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      c[j][1] = (c4 * c[j][1] - c[j][0]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  return {c[0][1], c[1][1], c[2][1], c[3][1], c[4][1]};
}

}  // namespace detail

/// The coefficients of the concentration equation written in terms of Theta, as
/// used for diagnostics. D is a five-point difference on the base grid (any spacing).
inline StabilityCoefficients assemble_coefficients(const BaseState& base, const PerturbationMoments& mom,
                                                   const Params& p) {
  const int n = base.size();
  if (static_cast<int>(mom.Gd1.size()) != n) throw std::invalid_argument("assemble_coefficients: size mismatch");
  const double mu0 = std::cos(p.theta0);
  std::vector<std::array<double, 5>> wts(n);
  std::vector<int> first(n);
  for (int i = 0; i < n; ++i) {
    first[i] = std::clamp(i - 2, 0, n - 5);
    wts[i] = detail::derivative_weights(base.z[i], &base.z[first[i]]);
  }
  auto D = [&](const auto& f) {
    using T = std::decay_t<decltype(f[0])>;
    std::vector<T> d(n);
    for (int i = 0; i < n; ++i)
      for (int q = 0; q < 5; ++q) d[i] += wts[i][q] * f[first[i] + q];
    return d;
  };
  for (double q : base.q_s)
    if (!(q > 1e-12)) throw std::domain_error("assemble_coefficients: degenerate illumination (q_s < 1e-12)");
  CProfile nGdM(n);
  std::vector<double> nGcM(n), Gd(n);
  for (int j = 0; j < n; ++j) {
    nGdM[j] = base.n_s[j] * mom.Gd1[j] * base.dMdG_s[j];
    nGcM[j] = base.n_s[j] * base.Gc_s[j] * base.dMdG_s[j];
    Gd[j] = base.G_s[j] - base.Gc_s[j];
  }
  const auto dGd = D(Gd), dnGcM = D(nGcM);
  const auto dnGdM = D(nGdM);
  StabilityCoefficients c;
  c.z = base.z;
  c.Lambda0.resize(n);
  c.Lambda1.resize(n);
  c.Lambda2.resize(n);
  c.Lambda3.resize(n);
  for (int j = 0; j < n; ++j) {
    const double cs = p.V_c * base.n_s[j] * base.M_s[j] / base.q_s[j];
    c.Lambda0[j] = p.V_c * dnGdM[j] - cplx(0.0, 1.0) * cs * (mom.l * mom.P[j] + mom.m * mom.Q[j]);
    c.Lambda1[j] = p.tau_H / mu0 * p.V_c * dnGcM[j];
    c.Lambda2[j] = 2.0 * p.tau_H / mu0 * p.V_c * nGcM[j] + p.V_c * base.dMdG_s[j] * dGd[j];
    c.Lambda3[j] = p.V_c * base.M_s[j];
  }
  return c;
}

namespace detail {

// Which constants are unknown in a Newton solve.
enum class Unknowns {
  R_real,         // stationary neutral: R, gamma = 0, real arithmetic
  R_omega,        // oscillatory neutral: R and Im gamma, Re gamma = 0
  gamma_real,     // growth rate, real gamma at fixed R
  gamma_complex,  // growth rate, complex gamma at fixed R
};

inline bool is_complex(Unknowns u) { return u == Unknowns::R_omega || u == Unknowns::gamma_complex; }
inline int n_params(Unknowns u) { return u == Unknowns::R_omega || u == Unknowns::gamma_complex ? 2 : 1; }

constexpr int kFields = 7;  // W, W', W'', W''', Theta, N, F
enum Field { fW = 0, fW1, fW2, fW3, fTheta, fN, fF };

struct Frozen {
  CProfile Gd, PQ;  // Gd1 and (l P + m Q) on the base grid
};

class StabilitySystem {
 public:
  StabilitySystem(const StabilityProblem& prob, double k, Unknowns u, double R_fixed, const Frozen& fr)
      : prob_(prob), k_(k), u_(u), R_fixed_(R_fixed), fr_(fr), cx_(is_complex(u)),
        nf_(cx_ ? 2 * kFields : kFields), m_(nf_ + n_params(u)) {}

  int m() const { return m_; }
  int n_fields() const { return nf_; }
  bool complex_arith() const { return cx_; }

  double R(const double* y) const { return (u_ == Unknowns::R_real || u_ == Unknowns::R_omega) ? y[nf_] : R_fixed_; }
  cplx gamma(const double* y) const {
    switch (u_) {
      case Unknowns::R_real: return 0.0;
      case Unknowns::R_omega: return {0.0, y[nf_ + 1]};
      case Unknowns::gamma_real: return {y[nf_], 0.0};
      case Unknowns::gamma_complex: return {y[nf_], y[nf_ + 1]};
    }
    return 0.0;
  }

  cplx field(const double* y, int c) const { return cx_ ? cplx(y[2 * c], y[2 * c + 1]) : cplx(y[c], 0.0); }

  void rhs(int j, const double* y, double* f, double* J) const {
    const double kk = k_ * k_, Sc = prob_.params().S_c;
    const cplx g = gamma(y);
    const double R = this->R(y);
    cplx Y[kFields];
    for (int c = 0; c < kFields; ++c) Y[c] = field(y, c);
    // complex Jacobian a[r][c] and source terms
    cplx a[kFields][kFields] = {};
    a[fW][fW1] = 1.0;
    a[fW1][fW2] = 1.0;
    a[fW2][fW3] = 1.0;
    a[fW3][fW2] = g / Sc + 2.0 * kk;
    a[fW3][fW] = -kk * (g / Sc + kk);
    a[fW3][fN] = -R * kk;
    a[fTheta][fN] = 1.0;
    a[fN][fF] = 1.0;
    a[fN][fN] = prob_.a3(j);
    a[fN][fTheta] = prob_.beta(j);
    a[fF][fN] = g + kk;
    a[fF][fW] = prob_.dn(j);
    cplx src[kFields] = {};
    const int b = prob_.base_index(j);
    src[fN] = prob_.g(j) * fr_.Gd[b];
    src[fF] = -cplx(0.0, 1.0) * prob_.cs(j) * fr_.PQ[b];
    cplx F[kFields];
    for (int r = 0; r < kFields; ++r) {
      F[r] = src[r];
      for (int c = 0; c < kFields; ++c) F[r] += a[r][c] * Y[c];
    }
    // derivatives with respect to R and gamma
    cplx dR[kFields] = {}, dg[kFields] = {};
    dR[fW3] = -kk * Y[fN];
    dg[fW3] = Y[fW2] / Sc - kk / Sc * Y[fW];
    dg[fF] = Y[fN];

    std::fill(J, J + m_ * m_, 0.0);
    std::fill(f, f + m_, 0.0);
    if (cx_) {
      for (int r = 0; r < kFields; ++r) {
        f[2 * r] = F[r].real();
        f[2 * r + 1] = F[r].imag();
        for (int c = 0; c < kFields; ++c) {
          const cplx v = a[r][c];
          if (v == 0.0) continue;
          J[(2 * r) * m_ + 2 * c] = v.real();
          J[(2 * r) * m_ + 2 * c + 1] = -v.imag();
          J[(2 * r + 1) * m_ + 2 * c] = v.imag();
          J[(2 * r + 1) * m_ + 2 * c + 1] = v.real();
        }
      }
      const int p0 = nf_, p1 = nf_ + 1;
      for (int r = 0; r < kFields; ++r) {
        if (u_ == Unknowns::R_omega) {
          J[(2 * r) * m_ + p0] = dR[r].real();
          J[(2 * r + 1) * m_ + p0] = dR[r].imag();
          const cplx dw = cplx(0.0, 1.0) * dg[r];
          J[(2 * r) * m_ + p1] = dw.real();
          J[(2 * r + 1) * m_ + p1] = dw.imag();
        } else {
          J[(2 * r) * m_ + p0] = dg[r].real();
          J[(2 * r + 1) * m_ + p0] = dg[r].imag();
          const cplx dw = cplx(0.0, 1.0) * dg[r];
          J[(2 * r) * m_ + p1] = dw.real();
          J[(2 * r + 1) * m_ + p1] = dw.imag();
        }
      }
    } else {
      for (int r = 0; r < kFields; ++r) {
        f[r] = F[r].real();
        for (int c = 0; c < kFields; ++c) J[r * m_ + c] = a[r][c].real();
        J[r * m_ + nf_] = (u_ == Unknowns::R_real ? dR[r] : dg[r]).real();
      }
    }
    // the mesh variable is s: dy/ds = (dz/ds) f
    const double js = prob_.dzds(j);
    for (int r = 0; r < m_; ++r) {
      f[r] *= js;
      for (int c = 0; c < m_; ++c) J[r * m_ + c] *= js;
    }
  }

  // z = 0: W = W' = F = 0 and the normalization N(0) = c.
  void left(const double* y, double* g, double* G, double c) const {
    std::fill(G, G + n_left() * m_, 0.0);
    int row = 0;
    auto pin = [&](int col, double target) {
      g[row] = y[col] - target;
      G[row * m_ + col] = 1.0;
      ++row;
    };
    for (int fld : {fW, fW1, fF, fN}) {
      if (cx_) {
        pin(2 * fld, fld == fN ? c : 0.0);
        pin(2 * fld + 1, 0.0);
      } else {
        pin(fld, fld == fN ? c : 0.0);
      }
    }
  }

  // z = 1: W = W' = F = Theta = 0.
  void right(const double* y, double* g, double* G) const {
    std::fill(G, G + (m_ - n_left()) * m_, 0.0);
    int row = 0;
    for (int fld : {fW, fW1, fF, fTheta}) {
      for (int part = 0; part < (cx_ ? 2 : 1); ++part) {
        const int col = cx_ ? 2 * fld + part : fld;
        g[row] = y[col];
        G[row * m_ + col] = 1.0;
        ++row;
      }
    }
  }

  int n_left() const { return cx_ ? 8 : 4; }

 private:
  const StabilityProblem& prob_;
  double k_;
  Unknowns u_;
  double R_fixed_;
  const Frozen& fr_;
  bool cx_;
  int nf_, m_;
};

// State on the mesh in complex form, independent of the arithmetic used by a solve.
struct ModeState {
  double R = 0.0;
  cplx gamma;
  std::vector<StateVector> y;   // mesh nodes
  std::vector<StateVector> ym;  // midpoints
};

inline std::vector<double> pack(const ModeState& s, const StabilitySystem& sys, Unknowns u) {
  const int m = sys.m(), nf = sys.n_fields(), nodes = static_cast<int>(s.y.size());
  std::vector<double> y(static_cast<std::size_t>(nodes) * m, 0.0);
  for (int i = 0; i < nodes; ++i) {
    double* yi = &y[static_cast<std::size_t>(i) * m];
    for (int c = 0; c < kFields; ++c) {
      if (sys.complex_arith()) {
        yi[2 * c] = s.y[i][c].real();
        yi[2 * c + 1] = s.y[i][c].imag();
      } else {
        yi[c] = s.y[i][c].real();
      }
    }
    switch (u) {
      case Unknowns::R_real: yi[nf] = s.R; break;
      case Unknowns::R_omega: yi[nf] = s.R; yi[nf + 1] = s.gamma.imag(); break;
      case Unknowns::gamma_real: yi[nf] = s.gamma.real(); break;
      case Unknowns::gamma_complex: yi[nf] = s.gamma.real(); yi[nf + 1] = s.gamma.imag(); break;
    }
  }
  return y;
}

inline ModeState unpack(const std::vector<double>& y, const std::vector<double>& y_mid, const StabilitySystem& sys,
                        int nodes) {
  const int m = sys.m();
  ModeState s;
  s.y.resize(nodes);
  s.ym.resize(nodes - 1);
  for (int i = 0; i < nodes; ++i)
    for (int c = 0; c < kFields; ++c) s.y[i][c] = sys.field(&y[static_cast<std::size_t>(i) * m], c);
  for (int i = 0; i + 1 < nodes; ++i)
    for (int c = 0; c < kFields; ++c) s.ym[i][c] = sys.field(&y_mid[static_cast<std::size_t>(i) * m], c);
  s.R = sys.R(&y[0]);
  s.gamma = sys.gamma(&y[0]);
  return s;
}

// N and Theta on the base grid: mesh nodes and Hermite-Simpson midpoints form a grid
// of spacing h/2, interpolated to the base grid by local degree-5 Lagrange polynomials.
inline void fine_profiles(const ModeState& s, int n_base, CProfile& N, CProfile& Theta) {
  const int nodes = static_cast<int>(s.y.size()), nh = 2 * nodes - 1;
  CProfile hN(nh), hT(nh);
  for (int i = 0; i < nodes; ++i) {
    hN[2 * i] = s.y[i][fN];
    hT[2 * i] = s.y[i][fTheta];
  }
  for (int i = 0; i + 1 < nodes; ++i) {
    hN[2 * i + 1] = s.ym[i][fN];
    hT[2 * i + 1] = s.ym[i][fTheta];
  }
  const int stride = (n_base - 1) / (nh - 1);
  N.assign(n_base, 0.0);
  Theta.assign(n_base, 0.0);
  for (int b = 0; b < n_base; ++b) {
    const int cell = b / stride, off = b % stride;
    if (off == 0) {
      N[b] = hN[cell];
      Theta[b] = hT[cell];
      continue;
    }
    const int s0 = std::clamp(cell - 2, 0, nh - 6);
    const double x = cell + static_cast<double>(off) / stride;
    for (int p = 0; p < 6; ++p) {
      double w = 1.0;
      for (int q = 0; q < 6; ++q)
        if (q != p) w *= (x - (s0 + q)) / static_cast<double>(p - q);
      N[b] += w * hN[s0 + p];
      Theta[b] += w * hT[s0 + p];
    }
  }
}

// Initial state from a Chebyshev mode, normalized so that N(0) = c.
inline ModeState from_chebyshev(const StabilityProblem& prob, const ChebyshevModel& model, const ChebyshevMode& mode,
                                double c) {
  const int N = model.intervals();
  const Matrix& D = model.D();
  auto apply = [&](const std::vector<cplx>& v) {
    std::vector<cplx> d(N + 1, 0.0);
    for (int i = 0; i <= N; ++i)
      for (int j = 0; j <= N; ++j) d[i] += D(i, j) * v[j];
    return d;
  };
  const auto W1 = apply(mode.W), W2 = apply(W1), W3 = apply(W2);
  const auto Nn = apply(mode.Theta), dN = apply(Nn);
  const auto& lc = model.coefficients();
  std::vector<cplx> F(N + 1);
  for (int j = 0; j <= N; ++j) F[j] = dN[j] - lc.a3[j] * Nn[j] - lc.beta[j] * mode.Theta[j];
  const cplx scale = c / Nn[N];  // bottom node is z = 0
  ModeState s;
  s.R = mode.R;
  s.gamma = mode.gamma;
  const int nodes = prob.mesh();
  s.y.resize(nodes);
  s.ym.resize(nodes - 1);
  const std::vector<cplx>* fields[kFields] = {&mode.W, &W1, &W2, &W3, &mode.Theta, &Nn, &F};
  for (int i = 0; i < nodes; ++i) {
    const double z = prob.z_node(i);
    for (int f = 0; f < kFields; ++f) s.y[i][f] = scale * chebyshev_interpolate(*fields[f], z);
  }
  for (int i = 0; i + 1 < nodes; ++i) {
    const double z = prob.z_mid(i);
    for (int f = 0; f < kFields; ++f) s.ym[i][f] = scale * chebyshev_interpolate(*fields[f], z);
  }
  return s;
}

inline double eigen_value_of(const ModeState& s, Unknowns u) {
  switch (u) {
    case Unknowns::R_real: return s.R;
    case Unknowns::R_omega: return std::hypot(s.R, s.gamma.imag());
    default: return std::abs(s.gamma);
  }
}

// Change of the collocation residual when the sources at the half-mesh points change by
// (dGd, dPQ). The residual is affine in the sources, so this is exact.
inline std::vector<double> source_response(const StabilityProblem& prob, const StabilitySystem& sys,
                                           const BvpWork& w, const CProfile& dGd, const CProfile& dPQ) {
  const int m = sys.m(), nodes = prob.mesh(), nl = sys.n_left();
  const double h = prob.h();
  const bool cx = sys.complex_arith();
  std::vector<double> r(static_cast<std::size_t>(nodes) * m, 0.0), fa(m), fb(m), fm(m), dym(m);
  auto df = [&](int j, double* out) {
    std::fill(out, out + m, 0.0);
    const double js = prob.dzds(j);
    const cplx sN = js * prob.g(j) * dGd[j], sF = -cplx(0.0, 1.0) * js * prob.cs(j) * dPQ[j];
    if (cx) {
      out[2 * fN] = sN.real();
      out[2 * fN + 1] = sN.imag();
      out[2 * fF] = sF.real();
      out[2 * fF + 1] = sF.imag();
    } else {
      out[fN] = sN.real();
      out[fF] = sF.real();
    }
  };
  df(0, fa.data());
  for (int i = 0; i + 1 < nodes; ++i) {
    df(2 * i + 2, fb.data());
    df(2 * i + 1, fm.data());
    for (int a = 0; a < m; ++a) dym[a] = h / 8.0 * (fa[a] - fb[a]);
    const double* Jm = &w.Jm[static_cast<std::size_t>(i) * m * m];
    for (int a = 0; a < m; ++a) {
      double v = fm[a];
      for (int c = 0; c < m; ++c) v += Jm[a * m + c] * dym[c];
      r[nl + static_cast<std::size_t>(i) * m + a] = -h / 6.0 * (fa[a] + 4.0 * v + fb[a]);
    }
    std::swap(fa, fb);
  }
  return r;
}

// Newton matrix K + P V^T: K is the banded local part, P V^T the radiation coupling
// through Theta sampled at the Chebyshev nodes. Solved by the Woodbury identity.
class CoupledNewtonMatrix {
 public:
  CoupledNewtonMatrix(BandMatrix K, std::vector<std::vector<double>> P,
                      std::vector<std::vector<std::pair<int, double>>> V)
      : K_(std::move(K)), V_(std::move(V)) {
    try {
      K_.factor();
    } catch (const SingularMatrixError& e) {
      throw NewtonDivergenceError(std::string("neutral_solve: singular Newton matrix: ") + e.what());
    }
    const int r = static_cast<int>(P.size());
    Z_.reserve(r);
    for (auto& col : P) Z_.push_back(K_.solve(std::move(col)));
    M_ = Matrix(r, r);
    for (int a = 0; a < r; ++a) {
      M_(a, a) = 1.0;
      for (int b = 0; b < r; ++b) M_(a, b) += dot(a, Z_[b]);
    }
  }

  // Solves (K + P V^T) x = -res.
  std::vector<double> correction(const std::vector<double>& res) {
    std::vector<double> x(res);
    for (double& v : x) v = -v;
    x = K_.solve(std::move(x));
    const int r = static_cast<int>(Z_.size());
    if (r == 0) return x;
    std::vector<double> t(r);
    for (int a = 0; a < r; ++a) t[a] = dot(a, x);
    std::vector<double> c;
    try {
      c = solve_dense(M_, std::move(t));
    } catch (const SingularMatrixError& e) {
      throw NewtonDivergenceError(std::string("neutral_solve: singular coupling matrix: ") + e.what());
    }
    for (int a = 0; a < r; ++a)
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c[a] * Z_[a][i];
    return x;
  }

 private:
  double dot(int row, const std::vector<double>& x) const {
    double s = 0.0;
    for (const auto& [i, w] : V_[row]) s += w * x[i];
    return s;
  }

  BandMatrix K_;
  std::vector<std::vector<std::pair<int, double>>> V_;
  std::vector<std::vector<double>> Z_;
  Matrix M_;
};

// Newton iteration on the full problem. Residuals always use the radiation moments of
// the current eigenfunction; the Newton matrix approximates their dependence on it with
// the coarse response table. Freezing the moments between local solves instead is a
// fixed-point iteration that diverges when the radiation coupling is strong.
inline EigenSolution solve_mode(const StabilityProblem& prob, double k, Unknowns u, double R_fixed, ModeState state,
                                const RadiationTable& table, const PerturbationMoments* warm = nullptr) {
  const auto& opt = prob.options();
  const int nodes = prob.mesh(), nb = prob.base().size(), nh = 2 * nodes - 1;
  const double l = k * std::cos(opt.wave_angle), m = k * std::sin(opt.wave_angle);
  if (table.k != k) throw std::invalid_argument("neutral_solve: response table is for another wavenumber");
  const PerturbationSolver rad(prob.base(), l, m, opt.radiation);
  const bool real_only = !is_complex(u);

  Frozen fr;
  fr.Gd.assign(nb, 0.0);
  fr.PQ.assign(nb, 0.0);
  PerturbationMoments mom;
  auto refresh = [&](const ModeState& st, const PerturbationMoments* start) {
    CProfile N, Theta;
    fine_profiles(st, nb, N, Theta);
    mom = rad.solve(N, Theta, start);
    for (int j = 0; j < nb; ++j) {
      cplx gd = mom.Gd1[j], pq = l * mom.P[j] + m * mom.Q[j];
      if (real_only) {
        gd = gd.real();
        pq = cplx(0.0, pq.imag());  // i (l P + m Q) is real for a real eigenfunction
      }
      fr.Gd[j] = gd;
      fr.PQ[j] = pq;
    }
  };

  StabilitySystem sys(prob, k, u, R_fixed, fr);
  BvpSystem bs;
  bs.m = sys.m();
  bs.n_left = sys.n_left();
  bs.rhs = [&](int j, const double* y, double* f, double* J) { sys.rhs(j, y, f, J); };
  bs.left = [&](const double* y, double* g, double* G) { sys.left(y, g, G, opt.normalization); };
  bs.right = [&](const double* y, double* g, double* G) { sys.right(y, g, G); };
  const int mm = sys.m();
  const double h = prob.h();

  // Coupling columns (source changes per unit Theta at each Chebyshev node) and rows
  // (Theta at the Chebyshev nodes by cubic interpolation on the mesh).
  const auto zc = chebyshev_nodes(table.N);
  std::vector<std::pair<CProfile, CProfile>> cols;
  std::vector<std::vector<std::pair<int, double>>> V;
  for (int q = 0; q <= table.N; ++q) {
    CProfile G(nh), PQ(nh);
    for (int j = 0; j < nh; ++j) std::tie(G[j], PQ[j]) = table.at(q, static_cast<double>(j) / (nh - 1));
    const double x = prob.map().s(zc[q]) * (nodes - 1);
    const int c0 = std::clamp(static_cast<int>(x) - 1, 0, nodes - 4);
    std::array<double, 4> wts;
    for (int a = 0; a < 4; ++a) {
      wts[a] = 1.0;
      for (int b = 0; b < 4; ++b)
        if (b != a) wts[a] *= (x - (c0 + b)) / static_cast<double>(a - b);
    }
    for (int part = 0; part < (real_only ? 1 : 2); ++part) {
      std::vector<std::pair<int, double>> row;
      const int col = real_only ? fTheta : 2 * fTheta + part;
      for (int a = 0; a < 4; ++a) row.emplace_back((c0 + a) * mm + col, wts[a]);
      V.push_back(std::move(row));
      const cplx unit = part == 0 ? cplx(1.0) : cplx(0.0, 1.0);
      CProfile g(nh), p(nh);
      for (int j = 0; j < nh; ++j) {
        g[j] = unit * G[j];
        p[j] = unit * PQ[j];
        if (real_only) {
          g[j] = g[j].real();
          p[j] = cplx(0.0, p[j].imag());
        }
      }
      cols.emplace_back(std::move(g), std::move(p));
    }
  }

  std::vector<double> y = pack(state, sys, u);
  refresh(state, warm);
  BvpWork w;
  eval_all(bs, nodes, h, y, w);
  std::vector<double> r = residual(bs, nodes, h, y, w);
  double norm = scaled_norm(r, y);
  double prev = eigen_value_of(state, u);

  for (int it = 1; it <= opt.max_newton; ++it) {
    std::vector<std::vector<double>> P;
    P.reserve(cols.size());
    for (const auto& [g, p] : cols) P.push_back(source_response(prob, sys, w, g, p));
    CoupledNewtonMatrix K(assemble_jacobian(bs, nodes, y, w), std::move(P), V);
    const std::vector<double> dy = K.correction(r);
    const double dnorm = max_abs(dy);

    // natural-monotonicity damping, as in solve_bvp
    const Frozen fr_old = fr;
    const PerturbationMoments mom_old = mom;
    double lambda = 1.0;
    for (int halving = 0;; ++halving, lambda *= 0.5) {
      std::vector<double> trial(y);
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += lambda * dy[i];
      fr = fr_old;
      BvpWork wt;
      eval_all(bs, nodes, h, trial, wt);
      ModeState st = unpack(trial, wt.ym, sys, nodes);
      refresh(st, &mom_old);
      eval_all(bs, nodes, h, trial, wt);
      std::vector<double> rt = residual(bs, nodes, h, trial, wt);
      const double nt = scaled_norm(rt, trial);
      const bool last = halving == 8;
      if (std::isfinite(nt) || last) {
        const double bar = std::isfinite(nt) ? max_abs(K.correction(rt)) : HUGE_VAL;
        if (bar <= (1.0 - 0.25 * lambda) * dnorm || nt <= opt.newton_tol || last) {
          if (!std::isfinite(nt)) throw NewtonDivergenceError("neutral_solve: Newton iteration diverged");
          y = std::move(trial);
          w = std::move(wt);
          r = std::move(rt);
          norm = nt;
          state = unpack(y, w.ym, sys, nodes);
          break;
        }
      }
    }
    if ((u == Unknowns::R_real || u == Unknowns::R_omega) && !(state.R > 0.0))
      throw NoNeutralModeError("neutral_solve: R drifted non-positive; no neutral mode on this branch at this k");
    const double val = eigen_value_of(state, u);
    const double change = std::abs(val - prev) / std::max(1.0, std::abs(val));
    prev = val;
    if (norm <= opt.newton_tol && change <= opt.eigen_tol) {
      EigenSolution sol;
      sol.k = k;
      sol.R = state.R;
      sol.gamma = state.gamma;
      sol.z.resize(nodes);
      for (int i = 0; i < nodes; ++i) {
        sol.z[i] = prob.z_node(i);
        sol.W.push_back(state.y[i][fW]);
        sol.Theta.push_back(state.y[i][fTheta]);
        sol.N.push_back(state.y[i][fN]);
        sol.F.push_back(state.y[i][fF]);
      }
      sol.oscillatory = std::abs(sol.gamma.imag()) > kOscillationThreshold;
      sol.mode_index = classify_mode(sol);
      sol.iterations = it;
      double bc = 0.0;
      for (int i : {0, nodes - 1})
        for (int f : {fW, fW1, fF}) bc = std::max(bc, std::abs(state.y[i][f]));
      bc = std::max(bc, std::abs(state.y[nodes - 1][fTheta]));
      sol.bc_residual = bc;
      sol.state = std::move(state.y);
      sol.state_mid = std::move(state.ym);
      sol.moments = std::move(mom);
      return sol;
    }
  }
  throw ConvergenceError("neutral_solve: Newton iteration did not converge (residual " + std::to_string(norm) + ")");
}

inline ModeState state_from_solution(const EigenSolution& s, const StabilityProblem& prob) {
  if (static_cast<int>(s.state.size()) != prob.mesh() || static_cast<int>(s.state_mid.size()) != prob.mesh() - 1)
    throw std::invalid_argument("seed solution was computed on a different mesh");
  ModeState st;
  st.R = s.R;
  st.gamma = s.gamma;
  st.y = s.state;
  st.ym = s.state_mid;
  return st;
}

}  // namespace detail

namespace detail {

// Newton solve for the neutral mode on `branch`, from either a previous solution or a
// seed-model mode (exactly one of guess / mode is given).
inline EigenSolution neutral_from(const StabilityProblem& prob, double k, Branch branch, const RadiationTable& table,
                                  const EigenSolution* guess, const ChebyshevModel* model = nullptr,
                                  const ChebyshevMode* mode = nullptr) {
  const bool real = branch == Branch::stationary && prob.real_modes();
  const auto u = real ? Unknowns::R_real : Unknowns::R_omega;
  ModeState st;
  const PerturbationMoments* warm = nullptr;
  if (guess) {
    st = state_from_solution(*guess, prob);
    if (branch == Branch::stationary) st.gamma = 0.0;
    if (real)
      for (auto& row : st.y)
        for (auto& v : row) v = v.real();
    if (!guess->moments.Gd1.empty() && guess->k == k) warm = &guess->moments;
  } else {
    st = from_chebyshev(prob, *model, *mode, prob.options().normalization);
    if (real) {
      for (auto& row : st.y)
        for (auto& v : row) v = v.real();
      for (auto& row : st.ym)
        for (auto& v : row) v = v.real();
    }
  }
  EigenSolution sol = solve_mode(prob, k, u, 0.0, std::move(st), table, warm);
  if (branch == Branch::oscillatory && !sol.oscillatory)
    throw NoNeutralModeError("neutral_solve: oscillatory solve collapsed onto the stationary branch");
  if (branch == Branch::stationary && sol.oscillatory)
    throw NoNeutralModeError("neutral_solve: stationary solve moved onto the oscillatory branch");
  return sol;
}

}  // namespace detail

/// Neutral mode at wavenumber k on the given branch. The seed is a previous solution
/// (continuation) or, if absent, the Chebyshev model's mode on that branch. The
/// radiation table is computed when not supplied.
inline EigenSolution neutral_solve(const StabilityProblem& prob, double k, Branch branch,
                                   const EigenSolution* guess = nullptr, const RadiationTable* table = nullptr) {
  if (!(k > 0.0)) throw std::invalid_argument("neutral_solve: k must be positive");
  std::optional<RadiationTable> own;
  if (!table) table = &own.emplace(prob.radiation_table(k));
  if (guess) return detail::neutral_from(prob, k, branch, *table, guess);
  const ChebyshevModel model = prob.chebyshev_model(k, table);
  std::optional<ChebyshevMode> mode = model.stationary();
  if (branch == Branch::oscillatory) mode = model.oscillatory(mode ? mode->R : 1e6);
  if (!mode) throw NoNeutralModeError(std::string("neutral_solve: no ") + branch_name(branch) + " seed at this k");
  return detail::neutral_from(prob, k, branch, *table, nullptr, &model, &*mode);
}

/// Growth rate at (k, R), continued from a neutral (or other) solution at the same k.
inline cplx growth_rate(const StabilityProblem& prob, double k, double R, const EigenSolution& seed,
                        const RadiationTable* table = nullptr) {
  std::optional<RadiationTable> own;
  if (!table) table = &own.emplace(prob.radiation_table(k));
  const bool real = !seed.oscillatory && prob.real_modes();
  detail::ModeState st = detail::state_from_solution(seed, prob);
  const auto u = real ? detail::Unknowns::gamma_real : detail::Unknowns::gamma_complex;
  if (real)
    for (auto& row : st.y)
      for (auto& v : row) v = v.real();
  const EigenSolution sol =
      detail::solve_mode(prob, k, u, R, std::move(st), *table, seed.k == k ? &seed.moments : nullptr);
  return sol.gamma;
}

struct NeutralSample {
  double k = 0.0, R = 0.0, Im_gamma = 0.0;
  Branch branch = Branch::stationary;
  int mode_index = 1;
  bool ok = false;
  std::string error;
};

struct NeutralCurve {
  std::vector<NeutralSample> samples;
  std::optional<double> k_b;
};

struct CriticalPoint {
  double k_c = 0.0, R_c = 0.0, lambda_c = 0.0, Im_gamma_c = 0.0;
  Branch branch = Branch::stationary;
  int mode_index = 1;
  std::optional<double> k_b;  // where the lowest branch turns from oscillatory to stationary
};

/// Lower of the stationary and oscillatory neutral solutions at k. Each branch is
/// tried from the matching previous solution when available, else from the seed model.
inline std::optional<EigenSolution> lowest_neutral(const StabilityProblem& prob, double k,
                                                   const EigenSolution* prev_stationary,
                                                   const EigenSolution* prev_oscillatory, std::string* error = nullptr,
                                                   EigenSolution* stationary_out = nullptr,
                                                   EigenSolution* oscillatory_out = nullptr) {
  std::string err;
  const RadiationTable table = prob.radiation_table(k);
  const ChebyshevModel model = prob.chebyshev_model(k, &table);
  const std::optional<ChebyshevMode> seed = model.stationary();
  auto attempt = [&](Branch b, const EigenSolution* guess, const ChebyshevMode* mode) -> std::optional<EigenSolution> {
    try {
      return detail::neutral_from(prob, k, b, table, guess, &model, mode);
    } catch (const std::exception& e) {
      err += std::string(branch_name(b)) + ": " + e.what() + "; ";
      return std::nullopt;
    }
  };

  // Continuation can follow a higher branch once a lower real mode appears (an
  // oscillatory pair splitting), so the seed model's lowest crossing is always tried
  // when the continued solution lies above it.
  std::optional<EigenSolution> st;
  if (prev_stationary) st = attempt(Branch::stationary, prev_stationary, nullptr);
  if (seed && (!st || st->R > 1.02 * seed->R)) {
    auto fresh = attempt(Branch::stationary, nullptr, &*seed);
    if (fresh && (!st || fresh->R < st->R)) st = std::move(fresh);
  }

  std::optional<EigenSolution> osc;
  if (prev_oscillatory) osc = attempt(Branch::oscillatory, prev_oscillatory, nullptr);
  if (!osc)
    if (const auto mode = model.oscillatory(st ? st->R : seed ? seed->R : 1e6))
      osc = attempt(Branch::oscillatory, nullptr, &*mode);

  if (st && stationary_out) *stationary_out = *st;
  if (osc && oscillatory_out) *oscillatory_out = *osc;
  std::optional<EigenSolution> best = st;
  if (osc && (!best || osc->R < best->R)) best = std::move(osc);
  if (!best && error) *error = err;
  return best;
}

/// Lowest neutral solution at n_k evenly spaced wavenumbers, each branch continued
/// from the previous sample. The accepted solutions are returned through solutions.
inline NeutralCurve trace_neutral_curve(const StabilityProblem& prob, double k_min, double k_max, int n_k,
                                        std::vector<std::optional<EigenSolution>>* solutions = nullptr) {
  if (!(k_min > 0.0 && k_max > k_min)) throw std::invalid_argument("trace_neutral_curve: need 0 < k_min < k_max");
  if (n_k < 8) throw std::invalid_argument("trace_neutral_curve: need at least 8 samples");
  NeutralCurve curve;
  if (solutions) solutions->assign(n_k, std::nullopt);
  std::optional<EigenSolution> ps, po;
  for (int i = 0; i < n_k; ++i) {
    const double k = k_min + (k_max - k_min) * i / (n_k - 1);
    NeutralSample s;
    s.k = k;
    EigenSolution so, oo;
    so.k = oo.k = -1.0;
    std::string err;
    const auto best = lowest_neutral(prob, k, ps ? &*ps : nullptr, po ? &*po : nullptr, &err, &so, &oo);
    // a branch that failed here is re-seeded from the model at the next k
    ps = so.k == k ? std::optional<EigenSolution>(std::move(so)) : std::nullopt;
    po = oo.k == k ? std::optional<EigenSolution>(std::move(oo)) : std::nullopt;
    if (best) {
      s.R = best->R;
      s.Im_gamma = best->gamma.imag();
      s.branch = best->oscillatory ? Branch::oscillatory : Branch::stationary;
      s.mode_index = best->mode_index;
      s.ok = true;
      if (solutions) (*solutions)[i] = std::move(*best);
    } else {
      s.error = err;
    }
    curve.samples.push_back(s);
  }
  for (std::size_t i = 1; i < curve.samples.size(); ++i) {
    const auto& a = curve.samples[i - 1];
    const auto& b = curve.samples[i];
    if (a.ok && b.ok && a.branch == Branch::oscillatory && b.branch == Branch::stationary) {
      curve.k_b = 0.5 * (a.k + b.k);
      break;
    }
  }
  return curve;
}

/// Parabolic refinement of the discrete minimum over the valid samples.
inline CriticalPoint critical_point(const NeutralCurve& curve) {
  std::vector<const NeutralSample*> ok;
  for (const auto& s : curve.samples)
    if (s.ok) ok.push_back(&s);
  if (ok.size() < 3) throw std::invalid_argument("critical_point: need at least 3 valid samples");
  std::size_t i = 0;
  for (std::size_t j = 1; j < ok.size(); ++j)
    if (ok[j]->R < ok[i]->R) i = j;
  if (i == 0 || i + 1 == ok.size()) throw NoNeutralModeError("critical_point: no interior minimum in the k window");
  const double x0 = ok[i - 1]->k, x1 = ok[i]->k, x2 = ok[i + 1]->k;
  const double y0 = ok[i - 1]->R, y1 = ok[i]->R, y2 = ok[i + 1]->R;
  const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  CriticalPoint c;
  if (a > 0.0) {
    const double b = d01 - a * (x0 + x1);
    c.k_c = -b / (2.0 * a);
    c.R_c = y1 + (c.k_c - x1) * (d01 + a * (c.k_c - x0));
  } else {
    c.k_c = x1;
    c.R_c = y1;
  }
  c.lambda_c = 2.0 * std::numbers::pi / c.k_c;
  c.Im_gamma_c = ok[i]->Im_gamma;
  c.branch = ok[i]->branch;
  c.mode_index = ok[i]->mode_index;
  return c;
}

struct CriticalSearchOptions {
  double k_min = 1.0, k_max = 8.0;
  int samples = 29;
  double k_tol = 1e-5;  // relative, for the refinement
};

/// Critical point: the minimum over k of the lowest neutral curve. The discrete
/// minimum of a continuation scan is refined by Brent's method on its branch.
inline CriticalPoint find_critical(const StabilityProblem& prob, const CriticalSearchOptions& opt = {}) {
  std::vector<std::optional<EigenSolution>> sols;
  const NeutralCurve curve = trace_neutral_curve(prob, opt.k_min, opt.k_max, opt.samples, &sols);
  int best = -1;
  for (int i = 0; i < opt.samples; ++i)
    if (sols[i] && (best < 0 || sols[i]->R < sols[best]->R)) best = i;
  if (best < 0) throw NoNeutralModeError("find_critical: no neutral solution in the k window");
  if (best == 0 || best + 1 == opt.samples || !sols[best - 1] || !sols[best + 1])
    throw NoNeutralModeError("find_critical: no interior minimum in the k window (lowest R = " +
                             std::to_string(sols[best]->R) + " at k = " + std::to_string(curve.samples[best].k) + ")");
  const Branch branch = sols[best]->oscillatory ? Branch::oscillatory : Branch::stationary;

  EigenSolution seed = *sols[best];
  std::optional<EigenSolution> at_min;
  auto R_of = [&](double k) {
    try {
      EigenSolution s = neutral_solve(prob, k, branch, &seed);
      seed = s;
      const double R = s.R;
      if (!at_min || R < at_min->R) at_min = std::move(s);
      return R;
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const int bits = std::max(8, static_cast<int>(-std::log2(opt.k_tol)));
  std::uintmax_t iters = 40;
  boost::math::tools::brent_find_minima(R_of, sols[best - 1]->k, sols[best + 1]->k, bits, iters);
  if (!at_min || at_min->R > sols[best]->R) at_min = sols[best];

  CriticalPoint c;
  c.k_c = at_min->k;
  c.R_c = at_min->R;
  c.lambda_c = 2.0 * std::numbers::pi / c.k_c;
  c.Im_gamma_c = at_min->gamma.imag();
  c.branch = at_min->oscillatory ? Branch::oscillatory : Branch::stationary;
  c.mode_index = at_min->mode_index;
  c.k_b = curve.k_b;
  return c;
}

}  // namespace photoconv
