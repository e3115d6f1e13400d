// Piecewise cubic Hermite interpolation on uniform grids.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace photoconv {

/// Slopes by fourth-order differences (one-sided near the ends). Where the data are
/// locally monotone the Fritsch-Carlson bound is enforced, so monotone data stay
/// monotone; smooth well-resolved data never hit the limiter.
inline std::vector<double> hermite_slopes(std::span<const double> y, double h) {
  const int n = static_cast<int>(y.size());
  if (n < 5) throw std::invalid_argument("hermite_slopes: need at least 5 samples");
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) {
    if (i >= 2 && i <= n - 3) {
      d[i] = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h);
    } else if (i < 2) {
      const int b = 0;
      const double s = i - b;  // evaluate derivative of quartic through y[0..4] at offset s
      const double f0 = y[b], f1 = y[b + 1], f2 = y[b + 2], f3 = y[b + 3], f4 = y[b + 4];
      if (s == 0)
        d[i] = (-25.0 * f0 + 48.0 * f1 - 36.0 * f2 + 16.0 * f3 - 3.0 * f4) / (12.0 * h);
      else
        d[i] = (-3.0 * f0 - 10.0 * f1 + 18.0 * f2 - 6.0 * f3 + f4) / (12.0 * h);
    } else {
      const int b = n - 5;
      const double f0 = y[b], f1 = y[b + 1], f2 = y[b + 2], f3 = y[b + 3], f4 = y[b + 4];
      if (i == n - 1)
        d[i] = (3.0 * f0 - 16.0 * f1 + 36.0 * f2 - 48.0 * f3 + 25.0 * f4) / (12.0 * h);
      else
        d[i] = (-f0 + 6.0 * f1 - 18.0 * f2 + 10.0 * f3 + 3.0 * f4) / (12.0 * h);
    }
  }
  for (int i = 0; i + 1 < n; ++i) {
    const double delta = (y[i + 1] - y[i]) / h;
    if (delta == 0.0) continue;
    const bool left_ok = i == 0 || (y[i] - y[i - 1]) * delta > 0.0;
    const bool right_ok = i + 2 >= n || (y[i + 2] - y[i + 1]) * delta > 0.0;
    if (!(left_ok && right_ok)) continue;
    const double a = d[i] / delta, b = d[i + 1] / delta;
    if (a < 0.0) d[i] = 0.0;
    if (b < 0.0) d[i + 1] = 0.0;
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double t = 3.0 / std::sqrt(r2);
      d[i] = t * a * delta;
      d[i + 1] = t * b * delta;
    }
  }
  return d;
}

/// Cubic Hermite interpolant of samples on x0 + i*h, i = 0..n-1.
class UniformCubic {
 public:
  UniformCubic() = default;
  UniformCubic(double x0, double h, std::vector<double> y)
      : x0_(x0), h_(h), y_(std::move(y)), d_(hermite_slopes(y_, h_)) {}

  double x_min() const { return x0_; }
  double x_max() const { return x0_ + h_ * (static_cast<double>(y_.size()) - 1); }
  const std::vector<double>& values() const { return y_; }

  /// Value; evaluation just outside the range extends the end cubic.
  double operator()(double x) const {
    auto [i, t] = locate(x);
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[i] + h10 * h_ * d_[i] + h01 * y_[i + 1] + h11 * h_ * d_[i + 1];
  }

  double derivative(double x) const {
    auto [i, t] = locate(x);
    const double t2 = t * t;
    const double g00 = 6 * t2 - 6 * t, g10 = 3 * t2 - 4 * t + 1;
    const double g01 = -6 * t2 + 6 * t, g11 = 3 * t2 - 2 * t;
    return (g00 * y_[i] + g01 * y_[i + 1]) / h_ + g10 * d_[i] + g11 * d_[i + 1];
  }

 private:
  std::pair<int, double> locate(double x) const {
    const int n = static_cast<int>(y_.size());
    const double s = (x - x0_) / h_;
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, n - 2);
    return {i, s - i};
  }

  double x0_ = 0.0, h_ = 1.0;
  std::vector<double> y_, d_;
};

}  // namespace photoconv
