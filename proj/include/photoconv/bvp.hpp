// Newton-Kantorovich solver for first-order two-point boundary value problems
// y' = f(z, y) on a uniform mesh, discretized by Hermite-Simpson collocation
// (fourth order):
//
//   y_{i+1} - y_i = h/6 (f_i + 4 f_m + f_{i+1}),   y_m = (y_i + y_{i+1})/2 + h/8 (f_i - f_{i+1}).
//
// The right side is sampled on a grid twice as fine as the mesh, so coefficient data
// live at mesh nodes (even fine indices) and midpoints (odd ones). Unknown constants
// such as eigenvalues are carried as extra components with f = 0.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "photoconv/linalg.hpp"

namespace photoconv {

class NewtonDivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BvpSystem {
  int m = 0;       // components
  int n_left = 0;  // boundary rows at z = 0; the remaining m - n_left sit at z = 1
  // f and its Jacobian (row-major m x m) at fine index j.
  std::function<void(int j, const double* y, double* f, double* J)> rhs;
  // Boundary residuals and their Jacobians (row-major rows x m).
  std::function<void(const double* y0, double* g, double* G)> left;
  std::function<void(const double* y1, double* g, double* G)> right;
};

struct BvpOptions {
  double tol = 1e-10;  // max residual, relative to max(1, max |y|)
  int max_iter = 50;
};

struct BvpResult {
  std::vector<double> y;      // node-major, nodes x m
  std::vector<double> y_mid;  // midpoint states, (nodes - 1) x m
  double residual = 0.0;
  int iterations = 0;
};

namespace detail {

struct BvpWork {
  std::vector<double> f, J;  // at every mesh node
  std::vector<double> fm, Jm, ym;  // at every midpoint
};

inline void eval_all(const BvpSystem& s, int nodes, double h, const std::vector<double>& y, BvpWork& w) {
  const int m = s.m;
  w.f.assign(static_cast<std::size_t>(nodes) * m, 0.0);
  w.J.assign(static_cast<std::size_t>(nodes) * m * m, 0.0);
  w.fm.assign(static_cast<std::size_t>(nodes - 1) * m, 0.0);
  w.Jm.assign(static_cast<std::size_t>(nodes - 1) * m * m, 0.0);
  w.ym.assign(static_cast<std::size_t>(nodes - 1) * m, 0.0);
  for (int i = 0; i < nodes; ++i) s.rhs(2 * i, &y[i * m], &w.f[i * m], &w.J[static_cast<std::size_t>(i) * m * m]);
  for (int i = 0; i + 1 < nodes; ++i) {
    double* ym = &w.ym[i * m];
    for (int a = 0; a < m; ++a)
      ym[a] = 0.5 * (y[i * m + a] + y[(i + 1) * m + a]) + h / 8.0 * (w.f[i * m + a] - w.f[(i + 1) * m + a]);
    s.rhs(2 * i + 1, ym, &w.fm[i * m], &w.Jm[static_cast<std::size_t>(i) * m * m]);
  }
}

// Residual vector in row order: left rows, interval rows, right rows.
inline std::vector<double> residual(const BvpSystem& s, int nodes, double h, const std::vector<double>& y,
                                    const BvpWork& w) {
  const int m = s.m, nl = s.n_left, nr = m - nl;
  std::vector<double> r(static_cast<std::size_t>(nodes) * m);
  std::vector<double> G(static_cast<std::size_t>(m) * m);
  s.left(&y[0], &r[0], G.data());
  for (int i = 0; i + 1 < nodes; ++i)
    for (int a = 0; a < m; ++a)
      r[nl + i * m + a] = y[(i + 1) * m + a] - y[i * m + a] -
                          h / 6.0 * (w.f[i * m + a] + 4.0 * w.fm[i * m + a] + w.f[(i + 1) * m + a]);
  s.right(&y[(nodes - 1) * m], &r[nl + (nodes - 1) * m], G.data());
  (void)nr;
  return r;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double scaled_norm(const std::vector<double>& r, const std::vector<double>& y) {
  double rmax = 0.0, ymax = 1.0;
  for (double v : r) rmax = std::max(rmax, std::abs(v));
  for (double v : y) ymax = std::max(ymax, std::abs(v));
  return rmax / ymax;
}

}  // namespace detail

/// Newton matrix of the collocation residual at y (row order as in detail::residual).
inline BandMatrix assemble_jacobian(const BvpSystem& s, int nodes, const std::vector<double>& y,
                                    const detail::BvpWork& w) {
  const int m = s.m, nl = s.n_left, nr = m - nl;
  const double h = 1.0 / (nodes - 1);
  BandMatrix K(nodes * m, nl + m - 1, 2 * m - 1 - nl);
  std::vector<double> G(static_cast<std::size_t>(m) * m), gtmp(m);
  std::vector<double> A(static_cast<std::size_t>(m) * m), B(static_cast<std::size_t>(m) * m);
  s.left(&y[0], gtmp.data(), G.data());
  for (int a = 0; a < nl; ++a)
    for (int b = 0; b < m; ++b) K.at(a, b) = G[a * m + b];
  for (int i = 0; i + 1 < nodes; ++i) {
    const double* Ji = &w.J[static_cast<std::size_t>(i) * m * m];
    const double* Jn = &w.J[static_cast<std::size_t>(i + 1) * m * m];
    const double* Jm = &w.Jm[static_cast<std::size_t>(i) * m * m];
    // dy_m/dy_i = I/2 + h/8 J_i, dy_m/dy_{i+1} = I/2 - h/8 J_{i+1}
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        double sa = 0.0, sb = 0.0;
        for (int c = 0; c < m; ++c) {
          const double di = (c == b ? 0.5 : 0.0) + h / 8.0 * Ji[c * m + b];
          const double dn = (c == b ? 0.5 : 0.0) - h / 8.0 * Jn[c * m + b];
          sa += Jm[a * m + c] * di;
          sb += Jm[a * m + c] * dn;
        }
        A[a * m + b] = (a == b ? -1.0 : 0.0) - h / 6.0 * (Ji[a * m + b] + 4.0 * sa);
        B[a * m + b] = (a == b ? 1.0 : 0.0) - h / 6.0 * (Jn[a * m + b] + 4.0 * sb);
      }
    const int row = nl + i * m;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        if (A[a * m + b] != 0.0) K.at(row + a, i * m + b) = A[a * m + b];
        if (B[a * m + b] != 0.0) K.at(row + a, (i + 1) * m + b) = B[a * m + b];
      }
  }
  s.right(&y[(nodes - 1) * m], gtmp.data(), G.data());
  for (int a = 0; a < nr; ++a)
    for (int b = 0; b < m; ++b) K.at(nl + (nodes - 1) * m + a, (nodes - 1) * m + b) = G[a * m + b];
  return K;
}

/// Solves the boundary value problem from the initial guess y (node-major). Throws
/// NewtonDivergenceError if the residual does not fall below tol within max_iter steps.
inline BvpResult solve_bvp(const BvpSystem& s, int nodes, std::vector<double> y, const BvpOptions& opt = {}) {
  const int m = s.m, nl = s.n_left, nr = m - nl;
  if (nodes < 3 || static_cast<int>(y.size()) != nodes * m) throw std::invalid_argument("solve_bvp: bad initial guess");
  if (nl < 0 || nl > m) throw std::invalid_argument("solve_bvp: bad boundary row count");
  const double h = 1.0 / (nodes - 1);
  const int n = nodes * m;

  detail::BvpWork w;
  detail::eval_all(s, nodes, h, y, w);
  std::vector<double> r = detail::residual(s, nodes, h, y, w);
  double norm = detail::scaled_norm(r, y);

  for (int it = 0; it < opt.max_iter; ++it) {
    // At least one step: the frozen-coefficient problem changes between outer
    // iterations by less than the residual test can see.
    if (norm <= opt.tol && it > 0) return {y, w.ym, norm, it};
    BandMatrix K = assemble_jacobian(s, nodes, y, w);
    std::vector<double> rhs(r);
    for (double& v : rhs) v = -v;
    std::vector<double> dy;
    try {
      K.factor();
    } catch (const SingularMatrixError& e) {
      throw NewtonDivergenceError(std::string("solve_bvp: singular Newton matrix: ") + e.what());
    }
    dy = K.solve(std::move(rhs));
    const double dnorm = detail::max_abs(dy);

    // Natural monotonicity: the simplified Newton correction at the trial point,
    // computed with the current factors, must be shorter than the full correction.
    // Unlike a residual test this is invariant to the scaling of the equations,
    // which matters for the bilinear eigenvalue terms.
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 10; ++halving, lambda *= 0.5) {
      std::vector<double> trial(y);
      for (int k = 0; k < n; ++k) trial[k] += lambda * dy[k];
      detail::BvpWork wt;
      detail::eval_all(s, nodes, h, trial, wt);
      std::vector<double> rt = detail::residual(s, nodes, h, trial, wt);
      const double nt = detail::scaled_norm(rt, trial);
      if (!std::isfinite(nt)) continue;
      std::vector<double> neg(rt);
      for (double& v : neg) v = -v;
      const double bar = detail::max_abs(K.solve(std::move(neg)));
      if (bar <= (1.0 - 0.25 * lambda) * dnorm || nt <= opt.tol || halving == 9) {
        y = std::move(trial);
        w = std::move(wt);
        r = std::move(rt);
        norm = nt;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (norm <= opt.tol) return {y, w.ym, norm, opt.max_iter};
  throw NewtonDivergenceError("solve_bvp: Newton iteration did not converge (residual " + std::to_string(norm) + ")");
}

}  // namespace photoconv
