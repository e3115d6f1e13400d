// Phototaxis response M(G): positive (towards the light) below the critical
// intensity G_c, negative above it.
#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace photoconv {

class TaxisFunction {
 public:
  virtual ~TaxisFunction() = default;
  virtual double G_c() const = 0;
  virtual double value(double G) const = 0;
  virtual double derivative(double G) const = 0;
  virtual double second_derivative(double G) const = 0;

 protected:
  static void check(double G) {
    if (!(G > 0.0)) throw std::domain_error("taxis: intensity must be positive");
  }
};

/// M(G) = 0.8 sin(3 pi chi / 2) - 0.1 sin(pi chi / 2), chi(G) = (G / k1) exp(k2 (k1 - G)).
///
/// The sine pair vanishes at chi0 = (2/pi) asin(sqrt(23/32)) and is negative on
/// (chi0, 2 - chi0); k2 is chosen so that chi(G_c) = chi0, leaving k1 as the one
/// shape parameter.
class SineTaxis final : public TaxisFunction {
 public:
  static double root_chi() { return 2.0 / std::numbers::pi * std::asin(std::sqrt(23.0 / 32.0)); }

  SineTaxis(double G_c, double kappa1) : G_c_(G_c), k1_(kappa1) {
    if (!(G_c > 0.0) || !(kappa1 > 0.0) || kappa1 == G_c)
      throw std::invalid_argument("SineTaxis: need G_c > 0, kappa1 > 0, kappa1 != G_c");
    k2_ = std::log(root_chi() * k1_ / G_c_) / (k1_ - G_c_);
  }

  double G_c() const override { return G_c_; }
  double kappa1() const { return k1_; }
  double kappa2() const { return k2_; }

  double chi(double G) const { return G / k1_ * std::exp(k2_ * (k1_ - G)); }

  double value(double G) const override {
    check(G);
    if (G == G_c_) return 0.0;
    const double c = chi(G);
    return 0.8 * std::sin(a * c) - 0.1 * std::sin(b * c);
  }

  double derivative(double G) const override {
    check(G);
    const double c = chi(G);
    const double dc = c * (1.0 / G - k2_);
    return (0.8 * a * std::cos(a * c) - 0.1 * b * std::cos(b * c)) * dc;
  }

  double second_derivative(double G) const override {
    check(G);
    const double c = chi(G);
    const double s = 1.0 / G - k2_;
    const double dc = c * s;
    const double ddc = c * (s * s - 1.0 / (G * G));
    return (-0.8 * a * a * std::sin(a * c) + 0.1 * b * b * std::sin(b * c)) * dc * dc +
           (0.8 * a * std::cos(a * c) - 0.1 * b * std::cos(b * c)) * ddc;
  }

 private:
  static constexpr double a = 1.5 * std::numbers::pi;
  static constexpr double b = 0.5 * std::numbers::pi;
  double G_c_, k1_, k2_ = 0.0;
};

/// Shape constant of the default response; see configs/taxis_default.cfg.
inline constexpr double kDefaultTaxisKappa1 = 3.8;

inline double taxis_value(const TaxisFunction& f, double G) { return f.value(G); }
inline double taxis_derivative(const TaxisFunction& f, double G) { return f.derivative(G); }

inline std::shared_ptr<const TaxisFunction> default_taxis(double G_c, double kappa1 = kDefaultTaxisKappa1) {
  return std::make_shared<SineTaxis>(G_c, kappa1);
}

}  // namespace photoconv
