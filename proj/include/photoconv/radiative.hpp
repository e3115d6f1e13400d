// Basic-state radiation in a plane-parallel, linearly anisotropic scattering layer.
//
// In optical depth tau (measured down from the lit surface) the total intensity G
// and the downward net flux q obey a pair of coupled Fredholm equations of the
// second kind with kernels E1, sgn*E2 and E3. They are discretized by product
// Nystrom integration on a uniform grid: the unknowns are interpolated by local
// cubics, the log singularity of the kernels at tau' = tau is integrated in closed
// form and the smooth remainder by Gauss-Legendre.
//
// Both unknowns are non-smooth at the layer faces: G carries tau*ln(tau) terms and
// q carries tau^2*ln(tau) terms. Their coefficients follow from the face values of
// G, so they are split off analytically as multiples of E2 and E3 of the distance
// to each face; only the smooth remainder is interpolated.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "photoconv/interp.hpp"
#include "photoconv/linalg.hpp"
#include "photoconv/specfun.hpp"

namespace photoconv {

struct RadiationParams {
  double tau_H = 0.5;   // extinction optical depth of the layer
  double omega = 0.4;   // single-scattering albedo
  double A1 = 0.0;      // linear anisotropy (forward scattering for A1 > 0)
  double theta0 = 0.0;  // beam angle from the vertical, radians
  double I_D = 0.26;    // diffuse irradiance
  double I_t = 1.0;     // collimated irradiance

  double mu0() const { return std::cos(theta0); }

  void validate() const {
    if (!(tau_H > 0.0)) throw std::invalid_argument("tau_H must be positive");
    if (!(omega >= 0.0 && omega < 1.0)) throw std::invalid_argument("omega must lie in [0, 1)");
    if (!(A1 > -1.0 && A1 < 1.0)) throw std::invalid_argument("A1 must lie in (-1, 1)");
    if (!(mu0() > 0.0) || theta0 < 0.0) throw std::invalid_argument("theta0 must lie in [0, pi/2)");
    if (!(I_D >= 0.0) || !(I_t >= 0.0)) throw std::invalid_argument("irradiances must be non-negative");
  }
};

struct IntensityFlux {
  double G;
  double q;
};

/// Attenuated collimated beam: (G_c, q_c) at optical depth tau.
inline IntensityFlux collimated_intensity(double tau, const RadiationParams& p) {
  const double mu0 = p.mu0();
  const double g = p.I_t * std::exp(-tau / mu0);
  return {g, mu0 * g};
}

/// Direct (unscattered) surface source terms: beam plus diffusely lit boundary.
inline IntensityFlux direct_source(double tau, const RadiationParams& p) {
  const IntensityFlux c = collimated_intensity(tau, p);
  if (tau <= 0.0) return {c.G + 2.0 * p.I_D, c.q + p.I_D};
  return {c.G + 2.0 * p.I_D * expint(2, tau), c.q + 2.0 * p.I_D * expint(3, tau)};
}

/// Coefficients of the face singularities:
/// G ~ gL E2(tau) + gR E2(tau_H - tau) + smooth, q ~ qL E3(tau) + qR E3(tau_H - tau) + smooth.
struct FaceTerms {
  double gL, gR, qL, qR;
};

inline FaceTerms face_terms(const RadiationParams& p, double G_top, double G_bottom) {
  const double c = 0.5 * p.omega;
  return {2.0 * p.I_D - c * G_top, -c * G_bottom, 2.0 * p.I_D - c * G_top, c * G_bottom};
}

class RadiationField {
 public:
  RadiationField() = default;
  RadiationField(RadiationParams params, std::vector<double> G, std::vector<double> q)
      : params_(params), G_nodes_(std::move(G)), q_nodes_(std::move(q)) {
    const int n = static_cast<int>(G_nodes_.size());
    if (n < 5 || q_nodes_.size() != G_nodes_.size()) throw std::invalid_argument("RadiationField: bad sample arrays");
    const double h = params.tau_H / (n - 1);
    tau_.resize(n);
    for (int i = 0; i < n; ++i) tau_[i] = i * h;
    tau_.back() = params.tau_H;
    faces_ = face_terms(params, G_nodes_.front(), G_nodes_.back());
    std::vector<double> gs(n), qs(n);
    for (int i = 0; i < n; ++i) {
      const Singular s = singular(tau_[i]);
      gs[i] = G_nodes_[i] - s.G;
      qs[i] = q_nodes_[i] - s.q;
    }
    G_ = UniformCubic(0.0, h, std::move(gs));
    q_ = UniformCubic(0.0, h, std::move(qs));
  }

  const RadiationParams& params() const { return params_; }
  const std::vector<double>& tau_grid() const { return tau_; }
  const std::vector<double>& G() const { return G_nodes_; }
  const std::vector<double>& q() const { return q_nodes_; }
  const FaceTerms& faces() const { return faces_; }
  int size() const { return static_cast<int>(tau_.size()); }

  IntensityFlux eval(double tau) const {
    const double slack = 1e-12 * params_.tau_H;
    if (!(tau >= -slack && tau <= params_.tau_H + slack))
      throw std::out_of_range("eval_field: tau outside [0, tau_H]");
    return eval_unchecked(tau);
  }

  /// No range check; slightly outside [0, tau_H] the end cubics are extended.
  IntensityFlux eval_unchecked(double tau) const {
    const double t = std::clamp(tau, 0.0, params_.tau_H);
    const Singular s = singular(t);
    return {G_(tau) + s.G, q_(tau) + s.q};
  }

  /// Intensity only, clamped into [0, tau_H]; the hot path of the shooting integrator.
  double G_clamped(double tau) const {
    const double t = std::clamp(tau, 0.0, params_.tau_H);
    return G_(t) + faces_.gL * expint(2, t) + faces_.gR * expint(2, params_.tau_H - t);
  }

  /// dG/dtau; diverges logarithmically at the faces when the face terms are non-zero.
  double dG_dtau(double tau) const {
    const double t = std::clamp(tau, 0.0, params_.tau_H);
    const double b = params_.tau_H - t;
    double d = G_.derivative(tau);
    if (faces_.gL != 0.0) d -= faces_.gL * (t > 0.0 ? expint(1, t) : HUGE_VAL);
    if (faces_.gR != 0.0) d += faces_.gR * (b > 0.0 ? expint(1, b) : HUGE_VAL);
    return d;
  }

 private:
  struct Singular {
    double G, q;
  };
  Singular singular(double t) const {
    const double b = params_.tau_H - t;
    return {faces_.gL * expint(2, t) + faces_.gR * expint(2, b), faces_.qL * expint(3, t) + faces_.qR * expint(3, b)};
  }

  RadiationParams params_;
  std::vector<double> tau_, G_nodes_, q_nodes_;
  FaceTerms faces_{};
  UniformCubic G_, q_;
};

inline IntensityFlux eval_field(const RadiationField& field, double tau) { return field.eval(tau); }

/// Product-integration weights for the three kernels on a uniform grid of n nodes.
/// (W1 g)_i ~ int E1(|t_i - t|) g(t) dt, (W2 g)_i ~ int sgn(t_i - t) E2(|t_i - t|) g(t) dt,
/// (W3 g)_i ~ int E3(|t_i - t|) g(t) dt, all over [0, tau_H].
struct NystromWeights {
  Matrix w1, w2, w3;
};

namespace detail {

// polynomial coefficients, lowest order first
inline std::vector<double> poly_mul_linear(const std::vector<double>& p, double a, double b) {
  std::vector<double> out(p.size() + 1, 0.0);  // p(t) * (a + b t)
  for (std::size_t m = 0; m < p.size(); ++m) {
    out[m] += a * p[m];
    out[m + 1] += b * p[m];
  }
  return out;
}

// Weights for one interval: int_0^1 l_p(u) K_k(h|d-u|) sgn du * h, p = 0..3, k = 1..3.
inline std::array<std::array<double, 4>, 3> interval_weights(int d, int o, double h, const QuadratureRule& gl) {
  std::array<double, 4> nodes{};
  for (int q = 0; q < 4; ++q) nodes[q] = q - o;
  auto lagrange = [&](int p, double u) {
    double v = 1.0;
    for (int q = 0; q < 4; ++q)
      if (q != p) v *= (u - nodes[q]) / (nodes[p] - nodes[q]);
    return v;
  };
  std::array<std::array<double, 4>, 3> w{};
  if (d != 0 && d != 1) {
    const double sgn = d >= 1 ? 1.0 : -1.0;
    for (std::size_t g = 0; g < gl.size(); ++g) {
      const double u = gl.nodes[g];
      const Expint123 e = expint123(h * std::abs(d - u));
      for (int p = 0; p < 4; ++p) {
        const double lw = gl.weights[g] * lagrange(p, u) * h;
        w[0][p] += lw * e.e1;
        w[1][p] += lw * sgn * e.e2;
        w[2][p] += lw * e.e3;
      }
    }
    return w;
  }
  // Singular end: x = h t with t = u (d = 0, target at left end) or t = 1 - u (d = 1).
  const double sgn = d == 1 ? 1.0 : -1.0;
  const double lnh = std::log(h);
  constexpr std::array<double, 3> log_coef{-1.0, 1.0, -0.5};  // E_k ~ c_k x^{k-1} ln x
  for (int p = 0; p < 4; ++p) {
    // P(t) = l_p(u(t)) as a polynomial in t
    std::vector<double> poly{1.0};
    for (int q = 0; q < 4; ++q) {
      if (q == p) continue;
      const double den = nodes[p] - nodes[q];
      if (d == 0)
        poly = poly_mul_linear(poly, -nodes[q] / den, 1.0 / den);
      else
        poly = poly_mul_linear(poly, (1.0 - nodes[q]) / den, -1.0 / den);
    }
    auto P = [&](double t) {
      double v = 0.0;
      for (std::size_t m = poly.size(); m-- > 0;) v = v * t + poly[m];
      return v;
    };
    // smooth remainders s_k = E_k - c_k x^{k-1} ln x
    for (std::size_t g = 0; g < gl.size(); ++g) {
      const double t = gl.nodes[g];
      const double x = h * t;
      const double s1 = expint1_regular(x);
      const double ex = std::exp(-x);
      const double s2 = ex - x * s1;
      const double s3 = 0.5 * (ex - x * s2);
      const double lw = gl.weights[g] * P(t) * h;
      w[0][p] += lw * s1;
      w[1][p] += lw * sgn * s2;
      w[2][p] += lw * s3;
    }
    // closed-form log part: h * c_k h^{k-1} * sum_m P_m [ln h/(m+k) - 1/(m+k)^2]
    for (int k = 1; k <= 3; ++k) {
      double acc = 0.0;
      for (std::size_t m = 0; m < poly.size(); ++m) {
        const double e = static_cast<double>(m) + k;
        acc += poly[m] * (lnh / e - 1.0 / (e * e));
      }
      const double val = h * log_coef[k - 1] * std::pow(h, k - 1) * acc;
      w[k - 1][p] += (k == 2 ? sgn : 1.0) * val;
    }
  }
  return w;
}

}  // namespace detail

inline NystromWeights nystrom_weights(int n, double tau_H) {
  if (n < 4) throw std::invalid_argument("nystrom_weights: need n >= 4");
  const double h = tau_H / (n - 1);
  const QuadratureRule gl = gauss_legendre(12, 0.0, 1.0);
  NystromWeights W{Matrix(n, n), Matrix(n, n), Matrix(n, n)};
  // weights depend on (i - j, stencil offset) only; cache them
  const int dmin = -(n - 2), dmax = n - 1;
  std::vector<std::array<std::array<std::array<double, 4>, 3>, 3>> cache(dmax - dmin + 1);
  std::vector<std::array<bool, 3>> have(dmax - dmin + 1, {false, false, false});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j + 1 < n; ++j) {
      const int s = std::clamp(j - 1, 0, n - 4);
      const int o = j - s;
      const int d = i - j;
      auto& slot = cache[d - dmin][o];
      if (!have[d - dmin][o]) {
        slot = detail::interval_weights(d, o, h, gl);
        have[d - dmin][o] = true;
      }
      for (int p = 0; p < 4; ++p) {
        W.w1(i, s + p) += slot[0][p];
        W.w2(i, s + p) += slot[1][p];
        W.w3(i, s + p) += slot[2][p];
      }
    }
  }
  return W;
}

namespace detail {

inline double safe_expint(int n, double x) { return expint(n, std::max(x, 1e-300)); }

// int_0^{tau_H} K(tau_i - t) f(t) dt with K in {E1, sgn E2, E3} and f = E_m(t), split
// at t = tau_i so that tanh-sinh only sees endpoint singularities.
inline double face_kernel_integral(int kernel, int m, double ti, double tau_H) {
  thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
  auto piece = [&](double a, double b, double sgn) {
    if (b - a <= 0.0) return 0.0;
    auto f = [&](double t) {
      const double x = std::abs(ti - t);
      return sgn * safe_expint(kernel, x) * safe_expint(m, t);
    };
    return ts.integrate(f, a, b, 1e-14);
  };
  return piece(0.0, ti, 1.0) + piece(ti, tau_H, kernel == 2 ? -1.0 : 1.0);
}

}  // namespace detail

/// Solves the coupled basic-state integral equations on n_nodes uniform nodes.
inline RadiationField solve_radiation(const RadiationParams& p, int n_nodes = 256) {
  p.validate();
  if (n_nodes < 16) throw std::invalid_argument("solve_radiation: n_nodes must be >= 16");
  const int n = n_nodes;
  const double h = p.tau_H / (n - 1);
  auto node = [&](int i) { return i == n - 1 ? p.tau_H : i * h; };
  std::vector<double> rhs(2 * n);
  for (int i = 0; i < n; ++i) {
    const IntensityFlux s = direct_source(node(i), p);
    rhs[i] = s.G;
    rhs[n + i] = s.q;
  }
  if (p.omega == 0.0) {
    return RadiationField(p, std::vector<double>(rhs.begin(), rhs.begin() + n),
                          std::vector<double>(rhs.begin() + n, rhs.end()));
  }
  const NystromWeights W = nystrom_weights(n, p.tau_H);

  // Corrections for the face terms: exact kernel integral minus what the cubic
  // product rule makes of the same function.
  std::vector<double> e2L(n), e2R(n), e3L(n), e3R(n);
  for (int i = 0; i < n; ++i) {
    e2L[i] = expint(2, node(i));
    e2R[i] = expint(2, p.tau_H - node(i));
    e3L[i] = expint(3, node(i));
    e3R[i] = expint(3, p.tau_H - node(i));
  }
  std::vector<double> x1(n), x2g(n), x2q(n), x3(n);
  for (int i = 0; i < n; ++i) {
    x1[i] = detail::face_kernel_integral(1, 2, node(i), p.tau_H);
    x2g[i] = detail::face_kernel_integral(2, 2, node(i), p.tau_H);
    x2q[i] = detail::face_kernel_integral(2, 3, node(i), p.tau_H);
    x3[i] = detail::face_kernel_integral(3, 3, node(i), p.tau_H);
  }
  auto apply = [&](const Matrix& w, const std::vector<double>& v) { return w.multiply(v); };
  const auto w1e2L = apply(W.w1, e2L), w1e2R = apply(W.w1, e2R);
  const auto w2e2L = apply(W.w2, e2L), w2e2R = apply(W.w2, e2R);
  const auto w2e3L = apply(W.w2, e3L), w2e3R = apply(W.w2, e3R);
  const auto w3e3L = apply(W.w3, e3L), w3e3R = apply(W.w3, e3R);
  std::vector<double> c1L(n), c1R(n), c2gL(n), c2gR(n), c2qL(n), c2qR(n), c3L(n), c3R(n);
  for (int i = 0; i < n; ++i) {
    const int m = n - 1 - i;  // mirror node: right-face integrals by reflection
    c1L[i] = x1[i] - w1e2L[i];
    c1R[i] = x1[m] - w1e2R[i];
    c2gL[i] = x2g[i] - w2e2L[i];
    c2gR[i] = -x2g[m] - w2e2R[i];
    c2qL[i] = x2q[i] - w2e3L[i];
    c2qR[i] = -x2q[m] - w2e3R[i];
    c3L[i] = x3[i] - w3e3L[i];
    c3R[i] = x3[m] - w3e3R[i];
  }

  // Face coefficients are affine in G_0 and G_{n-1}:
  //   gL = qL = 2 I_D - c G_0,  gR = -c G_{n-1},  qR = c G_{n-1}.
  const double c = 0.5 * p.omega;
  const double a1 = p.A1;
  Matrix A(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      A(i, j) = -c * W.w1(i, j);
      A(i, n + j) = -c * a1 * W.w2(i, j);
      A(n + i, j) = -c * W.w2(i, j);
      A(n + i, n + j) = -c * a1 * W.w3(i, j);
    }
    A(i, i) += 1.0;
    A(n + i, n + i) += 1.0;
    // G row: c * [gL c1L + gR c1R + A1 (qL c2qL + qR c2qR)]
    const double gGL = c1L[i] + a1 * c2qL[i];
    rhs[i] += c * 2.0 * p.I_D * gGL;
    A(i, 0) += c * c * gGL;
    A(i, n - 1) += c * c * c1R[i] - c * c * a1 * c2qR[i];
    // q row: c * [gL c2gL + gR c2gR + A1 (qL c3L + qR c3R)]
    const double gQL = c2gL[i] + a1 * c3L[i];
    rhs[n + i] += c * 2.0 * p.I_D * gQL;
    A(n + i, 0) += c * c * gQL;
    A(n + i, n - 1) += c * c * c2gR[i] - c * c * a1 * c3R[i];
  }
  std::vector<double> x = solve_dense(A, rhs);
  // one step of iterative refinement keeps the discrete residual at round-off level
  std::vector<double> ax = A.multiply(x);
  std::vector<double> r(2 * n);
  for (int i = 0; i < 2 * n; ++i) r[i] = rhs[i] - ax[i];
  const std::vector<double> dx = solve_dense(A, r);
  for (int i = 0; i < 2 * n; ++i) x[i] += dx[i];
  ax = A.multiply(x);
  double res = 0.0;
  for (int i = 0; i < 2 * n; ++i) res = std::max(res, std::abs(rhs[i] - ax[i]));
  if (!(res <= 1e-10)) throw SingularMatrixError("solve_radiation: Nystrom residual " + std::to_string(res));
  return RadiationField(p, std::vector<double>(x.begin(), x.begin() + n), std::vector<double>(x.begin() + n, x.end()));
}

}  // namespace photoconv
