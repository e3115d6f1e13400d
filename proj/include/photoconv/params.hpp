// Dimensionless governing numbers and the conversion from laboratory quantities.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "photoconv/radiative.hpp"

namespace photoconv {

struct Params {
  double S_c = 20.0;    // Schmidt number
  double V_c = 15.0;    // swimming speed scaled by D/H
  double tau_H = 0.5;
  double omega = 0.4;
  double A1 = 0.0;
  double theta0 = 0.0;  // radians
  double I_D = 0.26;
  double I_t = 1.0;
  double G_c = 1.3;     // critical intensity
  double R = 0.0;       // Rayleigh number

  RadiationParams radiation() const { return {tau_H, omega, A1, theta0, I_D, I_t}; }

  void validate() const {
    radiation().validate();
    if (!(S_c > 0.0)) throw std::invalid_argument("S_c must be positive");
    if (!(V_c > 0.0)) throw std::invalid_argument("V_c must be positive");
    if (!(G_c > 0.0)) throw std::invalid_argument("G_c must be positive");
    if (!(R >= 0.0)) throw std::invalid_argument("R must be non-negative");
  }
};

/// Laboratory-scale inputs, SI units.
struct DimensionalInputs {
  double H;             // layer depth, m
  double D;             // cell diffusivity, m^2/s
  double W_c;           // mean swimming speed, m/s
  double nu_fluid;      // kinematic viscosity, m^2/s
  double n_bar;         // mean concentration, 1/m^3
  double V_cell;        // cell volume, m^3
  double delta_rho;     // relative density excess (rho_cell - rho) / rho
  double g = 9.81;      // m/s^2
  double alpha;         // absorption cross-section, m^2
  double beta;          // scattering cross-section, m^2
};

/// Non-fatal remarks about physically questionable inputs.
inline std::vector<std::string> dimensional_warnings(const DimensionalInputs& d) {
  std::vector<std::string> out;
  if (d.delta_rho > 0.1) out.push_back("relative density excess > 0.1: Boussinesq approximation is doubtful");
  return out;
}

/// Fills the dimensionless groups; the radiation and taxis fields not determined
/// by d (A1, theta0, I_D, I_t, G_c) keep the values of `base`.
inline Params nondimensionalize(const DimensionalInputs& d, Params base = {}) {
  for (double v : {d.H, d.D, d.W_c, d.nu_fluid, d.n_bar, d.V_cell, d.delta_rho, d.g, d.alpha, d.beta})
    if (!(v > 0.0)) throw std::invalid_argument("nondimensionalize: all inputs must be positive");
  base.V_c = d.W_c * d.H / d.D;
  base.S_c = d.nu_fluid / d.D;
  base.tau_H = (d.alpha + d.beta) * d.n_bar * d.H;
  base.omega = d.beta / (d.alpha + d.beta);
  base.R = d.n_bar * d.V_cell * d.g * d.delta_rho * d.H * d.H * d.H / (d.nu_fluid * d.D);
  return base;
}

}  // namespace photoconv
