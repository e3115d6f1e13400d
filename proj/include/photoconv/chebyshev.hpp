// Chebyshev collocation model of the stability problem, used to seed the
// finite-difference solver. The nonlocal radiation terms (diffuse intensity and
// horizontal flux perturbations) enter through a tabulated response matrix, or are
// dropped when none is given; everything else matches the flux form used by the
// main solver.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "photoconv/linalg.hpp"

namespace photoconv {

/// Local coefficients of the concentration equation on the Chebyshev nodes.
struct LocalCoefficients {
  std::vector<double> a3;    // V_c M_s
  std::vector<double> beta;  // V_c n_s M'(G) G_c tau_H / cos(theta0): coefficient of Theta
  std::vector<double> dn;    // dn_s/dz = V_c M_s n_s
  std::vector<double> g;     // V_c n_s M'(G): coefficient of the diffuse perturbation
  std::vector<double> cs;    // V_c n_s M_s / q_s: coefficient of the horizontal flux
};

/// Linear response of the radiation perturbations to Theta, node to node: the diffuse
/// intensity Gd1 = G Theta and the horizontal flux l P + m Q = PQ Theta.
struct RadiationResponse {
  CMatrix G, PQ;
};

/// Nodes z_j = (1 + cos(pi j / N)) / 2, running from the top (j = 0) to the bottom.
inline std::vector<double> chebyshev_nodes(int N) {
  std::vector<double> z(N + 1);
  for (int j = 0; j <= N; ++j) z[j] = 0.5 * (1.0 + std::cos(std::numbers::pi * j / N));
  return z;
}

/// d/dz on the nodes above.
inline Matrix chebyshev_derivative(int N) {
  Matrix D(N + 1, N + 1);
  std::vector<double> x(N + 1), c(N + 1, 1.0);
  for (int j = 0; j <= N; ++j) x[j] = std::cos(std::numbers::pi * j / N);
  c[0] = c[N] = 2.0;
  for (int i = 0; i <= N; ++i) {
    double diag = 0.0;
    for (int j = 0; j <= N; ++j) {
      if (i == j) continue;
      const double sign = (i + j) % 2 == 0 ? 1.0 : -1.0;
      D(i, j) = 2.0 * c[i] / c[j] * sign / (x[i] - x[j]);
      diag -= D(i, j);
    }
    D(i, i) = diag;
  }
  return D;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (int j = 0; j < b.cols(); ++j)
    for (int k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj == 0.0) continue;
      for (int i = 0; i < a.rows(); ++i) c(i, j) += a(i, k) * bkj;
    }
  return c;
}

/// Barycentric interpolation of values on chebyshev_nodes(N) at z.
template <class T>
T chebyshev_interpolate(const std::vector<T>& v, double z) {
  const int N = static_cast<int>(v.size()) - 1;
  const double x = 2.0 * z - 1.0;
  T num{};
  double den = 0.0;
  for (int j = 0; j <= N; ++j) {
    const double xj = std::cos(std::numbers::pi * j / N);
    double w = (j % 2 == 0) ? 1.0 : -1.0;
    if (j == 0 || j == N) w *= 0.5;
    if (x == xj) return v[j];
    const double t = w / (x - xj);
    num += t * v[j];
    den += t;
  }
  return num / den;
}

struct ChebyshevMode {
  double R = 0.0;
  std::complex<double> gamma;
  std::vector<std::complex<double>> W, Theta;  // on the Chebyshev nodes
};

/// Tau-collocation discretization at one wavenumber k, as the pencil
/// (A + R B) v = gamma C v in v = (W, Theta). Without a radiation response the nonlocal
/// terms are dropped, which leaves only real (stationary) neutral modes.
class ChebyshevModel {
 public:
  ChebyshevModel(int N, double S_c, double k, LocalCoefficients coef, std::optional<RadiationResponse> resp = {})
      : N_(N), S_c_(S_c), k_(k), c_(std::move(coef)), resp_(std::move(resp)) {
    if (N < 16) throw std::invalid_argument("ChebyshevModel: need at least 16 intervals");
    for (const auto* v : {&c_.a3, &c_.beta, &c_.dn})
      if (static_cast<int>(v->size()) != N + 1) throw std::invalid_argument("ChebyshevModel: coefficient size");
    if (resp_ && (static_cast<int>(c_.g.size()) != N + 1 || static_cast<int>(c_.cs.size()) != N + 1 ||
                  resp_->G.rows() != N + 1 || resp_->PQ.rows() != N + 1))
      throw std::invalid_argument("ChebyshevModel: response size");
    D1_ = chebyshev_derivative(N);
    D2_ = matmul(D1_, D1_);
    D4_ = matmul(D2_, D2_);
    build();
  }

  int intervals() const { return N_; }
  double k() const { return k_; }
  const Matrix& D() const { return D1_; }
  const LocalCoefficients& coefficients() const { return c_; }
  bool has_response() const { return resp_.has_value(); }

  /// Smallest positive Rayleigh number with a neutral stationary mode.
  std::optional<ChebyshevMode> stationary() const {
    CMatrix mB(B_.rows(), B_.cols());
    for (int i = 0; i < B_.rows(); ++i)
      for (int j = 0; j < B_.cols(); ++j) mB(i, j) = -B_(i, j);
    const auto eig = generalized_eigen(A_, mB);
    std::optional<ChebyshevMode> best;
    for (std::size_t e = 0; e < eig.values.size(); ++e) {
      const auto R = eig.values[e];
      if (!(R.real() > 0.0) || std::abs(R.imag()) > 1e-6 * std::abs(R)) continue;
      if (best && best->R <= R.real()) continue;
      best = split(eig.vectors[e], R.real(), 0.0);
    }
    return best;
  }

  /// Eigenvalue gamma with the largest real part at R, optionally only among
  /// oscillatory ones (Im gamma > threshold; one member of each conjugate pair).
  std::optional<ChebyshevMode> leading(double R, bool oscillatory_only, double threshold = 1e-3) const {
    CMatrix A = A_;
    for (int i = 0; i < A.rows(); ++i)
      for (int j = 0; j < A.cols(); ++j) A(i, j) += R * B_(i, j);
    const auto eig = generalized_eigen(A, C_);
    std::optional<ChebyshevMode> best;
    for (std::size_t e = 0; e < eig.values.size(); ++e) {
      const auto g = eig.values[e];
      if (!std::isfinite(g.real()) || std::abs(g) > kSpurious) continue;
      if (oscillatory_only && !(g.imag() > threshold)) continue;
      if (best && best->gamma.real() >= g.real()) continue;
      best = split(eig.vectors[e], R, g);
    }
    return best;
  }

  /// Neutral oscillatory mode with R in (0, R_hi): the lowest R where the leading
  /// oscillatory growth rate crosses zero from below, located on a logarithmic scan
  /// (oscillatory pairs can merge into real modes again at larger R). Empty if none.
  std::optional<ChebyshevMode> oscillatory(double R_hi, double R_lo = 1.0, int steps = 32, double rtol = 1e-4) const {
    auto growth = [&](double R) {
      const auto m = leading(R, true);
      return m ? m->gamma.real() : -std::numeric_limits<double>::infinity();
    };
    double lo = R_lo, glo = growth(lo);
    if (glo > 0.0) return std::nullopt;  // unstable without buoyancy: not a neutral branch
    const double ratio = std::pow(R_hi / R_lo, 1.0 / steps);
    for (int s = 1; s <= steps; ++s) {
      double hi = R_lo * std::pow(ratio, s);
      if (!(growth(hi) > 0.0)) {
        lo = hi;
        continue;
      }
      while (hi - lo > rtol * hi) {
        const double mid = 0.5 * (lo + hi);
        (growth(mid) > 0.0 ? hi : lo) = mid;
      }
      return leading(0.5 * (lo + hi), true);
    }
    return std::nullopt;
  }

 private:
  static constexpr double kSpurious = 1e5;

  void build() {
    const int n = N_ + 1;
    const double kk = k_ * k_;
    const std::complex<double> I(0.0, 1.0);
    A_ = CMatrix(2 * n, 2 * n);
    B_ = CMatrix(2 * n, 2 * n);
    C_ = CMatrix(2 * n, 2 * n);
    // velocity rows
    for (int i = 2; i <= N_ - 2; ++i) {
      for (int j = 0; j < n; ++j) {
        A_(i, j) = D4_(i, j) - 2.0 * kk * D2_(i, j);
        B_(i, n + j) = kk * D1_(i, j);
        C_(i, j) = D2_(i, j) / S_c_;
      }
      A_(i, i) += kk * kk;
      C_(i, i) -= kk / S_c_;
    }
    A_(0, 0) = 1.0;
    A_(N_, N_) = 1.0;
    for (int j = 0; j < n; ++j) {
      A_(1, j) = D1_(0, j);
      A_(N_ - 1, j) = D1_(N_, j);
    }
    // flux F = D^2 Theta - a3 D Theta - beta Theta - g Gd1 as an operator on Theta
    CMatrix Fop(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Fop(i, j) = D2_(i, j) - c_.a3[i] * D1_(i, j);
        if (resp_) Fop(i, j) -= c_.g[i] * resp_->G(i, j);
      }
    for (int i = 0; i < n; ++i) Fop(i, i) -= c_.beta[i];
    // concentration rows: D F - k^2 D Theta - dn W + i cs PQ Theta = gamma D Theta
    for (int i = 2; i <= N_ - 1; ++i) {
      const int r = n + i;
      for (int j = 0; j < n; ++j) {
        std::complex<double> s = -kk * D1_(i, j);
        for (int q = 0; q < n; ++q) s += D1_(i, q) * Fop(q, j);
        if (resp_) s += I * c_.cs[i] * resp_->PQ(i, j);
        A_(r, n + j) = s;
        C_(r, n + j) = D1_(i, j);
      }
      A_(r, i) = -c_.dn[i];
    }
    A_(n, n) = 1.0;  // Theta(1) = 0
    for (int j = 0; j < n; ++j) {
      A_(n + 1, n + j) = Fop(0, j);
      A_(n + N_, n + j) = Fop(N_, j);
    }
  }

  ChebyshevMode split(const std::vector<std::complex<double>>& v, double R, std::complex<double> g) const {
    ChebyshevMode m;
    m.R = R;
    m.gamma = g;
    const int n = N_ + 1;
    m.W.assign(v.begin(), v.begin() + n);
    m.Theta.assign(v.begin() + n, v.end());
    return m;
  }

  int N_;
  double S_c_, k_;
  LocalCoefficients c_;
  std::optional<RadiationResponse> resp_;
  Matrix D1_, D2_, D4_;
  CMatrix A_, B_, C_;
};

}  // namespace photoconv
