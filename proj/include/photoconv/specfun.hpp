// Exponential integrals and Gauss-Legendre rules.
#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace photoconv {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
    return sum;
  }
};

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286061;

// Below this argument E1 uses its power series, above it the Lentz continued fraction.
inline constexpr double kExpintSwitch = 1.0;

inline double expint1_series(double x) {
  // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
  double sum = 0.0;
  double term = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= -x / k;
    const double add = term / k;
    sum += add;
    if (std::abs(add) < std::abs(sum) * 1e-17) break;
  }
  return -kEulerGamma - std::log(x) - sum;
}

inline double expint1_cfrac(double x) {
  // Modified Lentz evaluation of E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
  constexpr double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x);
}

}  // namespace detail

/// E1(x) + ln(x): the part of E1 that stays smooth at the origin.
inline double expint1_regular(double x) {
  if (x <= 0.0) return -detail::kEulerGamma;
  if (x <= detail::kExpintSwitch) {
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= -x / k;
      const double add = term / k;
      sum += add;
      if (std::abs(add) <= std::abs(sum) * 1e-17) break;
    }
    return -detail::kEulerGamma - sum;
  }
  return detail::expint1_cfrac(x) + std::log(x);
}

/// Exponential integral E_n(x) = int_1^inf e^{-xt} t^{-n} dt.
///
/// E1 is evaluated directly; higher orders come from the upward recurrence
/// n E_{n+1}(x) = e^{-x} - x E_n(x), which is stable for the low orders used here.
inline double expint(int n, double x) {
  if (n < 1) throw std::domain_error("expint: order must be >= 1");
  if (!(x >= 0.0)) throw std::domain_error("expint: argument must be non-negative");
  if (x == 0.0 || x < 1e-300) {
    if (n == 1) throw std::domain_error("expint: E1 diverges at x = 0");
    return 1.0 / (n - 1);
  }
  double en = x <= detail::kExpintSwitch ? detail::expint1_series(x) : detail::expint1_cfrac(x);
  if (n == 1) return en;
  const double ex = std::exp(-x);
  for (int k = 1; k < n; ++k) en = (ex - x * en) / k;
  return en;
}

/// E1, E2, E3 at one argument sharing a single E1 evaluation. Requires x > 0.
struct Expint123 {
  double e1, e2, e3;
};

inline Expint123 expint123(double x) {
  const double e1 = expint(1, x);
  const double ex = std::exp(-x);
  const double e2 = ex - x * e1;
  const double e3 = 0.5 * (ex - x * e2);
  return {e1, e2, e3};
}

/// n-point Gauss-Legendre rule on (-1, 1), nodes ascending.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 2) throw std::invalid_argument("gauss_legendre: need n >= 2, got " + std::to_string(n));
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (x * p0 - p1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Gauss-Legendre rule mapped to [a, b].
inline QuadratureRule gauss_legendre(int n, double a, double b) {
  QuadratureRule rule = gauss_legendre(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

}  // namespace photoconv
