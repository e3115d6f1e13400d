#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "photoconv/perturbation.hpp"

using namespace photoconv;

namespace {

constexpr double deg = std::numbers::pi / 180.0;
constexpr double pi = std::numbers::pi;

class NoTaxis final : public TaxisFunction {
 public:
  double G_c() const override { return 1.3; }
  double value(double) const override { return 0.0; }
  double derivative(double) const override { return 0.0; }
  double second_derivative(double) const override { return 0.0; }
};

Params make_params(double tau_H, double omega, double A1, double theta_deg, double I_D = 0.26) {
  Params p;
  p.tau_H = tau_H;
  p.omega = omega;
  p.A1 = A1;
  p.theta0 = theta_deg * deg;
  p.I_D = I_D;
  return p;
}

BaseState uniform_base(const Params& p, int nz) { return solve_base_state(p, solve_radiation(p.radiation(), 256), NoTaxis(), nz); }
BaseState taxis_base(const Params& p, int nz) { return solve_base_state(p, solve_radiation(p.radiation(), 256), nz); }

// Smooth disturbance with Theta(1) = 0 and Theta' = N.
void sample_profiles(const BaseState& b, CProfile& N, CProfile& Theta, double phase = 0.3) {
  const int n = b.size();
  N.resize(n);
  Theta.resize(n);
  const cplx e(std::cos(phase), std::sin(phase));
  for (int j = 0; j < n; ++j) {
    const double z = b.z[j];
    N[j] = e * cplx(std::cos(pi * z), 0.5 * z);
    Theta[j] = e * cplx(std::sin(pi * z) / pi, 0.25 * (z * z - 1.0));
  }
}

double max_diff(const CProfile& a, const CProfile& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
  return d;
}

double max_abs(const CProfile& a) {
  double d = 0.0;
  for (const auto& v : a) d = std::max(d, std::abs(v));
  return d;
}

}  // namespace

TEST(Perturbation, ExpMomentsBothBranches) {
  for (cplx x : {cplx(0.3, 0.2), cplx(0.999, 0.0), cplx(1.001, 0.0), cplx(4.0, -7.0), cplx(0.0, 25.0)}) {
    const auto I = detail::exp_moments(x);
    const auto rule = gauss_legendre(40, 0.0, 1.0);
    for (int k = 0; k < 4; ++k) {
      cplx ref = 0.0;
      for (std::size_t g = 0; g < rule.size(); ++g) ref += rule.weights[g] * std::exp(-x * rule.nodes[g]) * std::pow(rule.nodes[g], k);
      EXPECT_NEAR(std::abs(I[k] - ref), 0.0, 1e-14) << x << " k=" << k;
    }
  }
}

TEST(Perturbation, OrdinatesIntegrateSphere) {
  const Ordinates o = make_ordinates(24, 16);
  double w = 0.0, nu2 = 0.0;
  for (std::size_t i = 0; i < o.nu.size(); ++i) {
    w += o.w_nu[i];
    nu2 += o.w_nu[i] * o.nu[i] * o.nu[i];
  }
  EXPECT_NEAR(w * o.w_phi * o.phi.size(), 4.0 * pi, 1e-13);
  EXPECT_NEAR(nu2, 2.0 / 3.0, 1e-7);  // graded nodes trade polynomial exactness for wall layers
  EXPECT_THROW(make_ordinates(7, 16), std::invalid_argument);
}

TEST(Perturbation, CollimatedClosedForm) {
  const Params p = make_params(0.5, 0.4, 0.0, 0.0);
  const BaseState b = uniform_base(p, 257);
  CProfile Theta(b.size());
  for (int j = 0; j < b.size(); ++j) Theta[j] = b.z[j] - 1.0;
  const auto [Gc1, Sc] = perturbed_collimated(b, Theta, p);
  for (int j = 0; j < b.size(); ++j) {
    const double z = b.z[j];
    EXPECT_NEAR(Gc1[j].real(), 0.5 * (z - 1.0) * std::exp(-0.5 * (1.0 - z)), 1e-12);
    EXPECT_NEAR(std::abs(Sc[j] + Gc1[j]), 0.0, 1e-15);
  }
}

TEST(Perturbation, ZeroDisturbanceGivesZeroMoments) {
  const Params p = make_params(1.0, 0.4, 0.4, 40.0);
  const BaseState b = taxis_base(p, 257);
  const CProfile zero(b.size(), 0.0);
  const auto mom = solve_perturbed_moments(b, zero, zero, 2.0, 1.0);
  for (const auto* v : {&mom.Gc1, &mom.Gd1, &mom.P, &mom.Q, &mom.S}) EXPECT_EQ(max_abs(*v), 0.0);
}

TEST(Perturbation, DiffuseTableIntegratesToDiffuseIntensity) {
  const Params p = make_params(1.0, 0.4, 0.4, 40.0, 0.48);
  const BaseState b = taxis_base(p, 513);
  const Ordinates o = make_ordinates(24, 16);
  const auto table = diffuse_ordinate_table(b, o);
  double worst_G = 0.0, worst_q = 0.0;
  const double mu0 = std::cos(p.theta0);
  for (int j = 0; j < b.size(); ++j) {
    double G = 0.0, flux = 0.0;
    for (std::size_t i = 0; i < o.nu.size(); ++i) {
      G += 2.0 * pi * o.w_nu[i] * table[i][j];
      flux += 2.0 * pi * o.w_nu[i] * o.nu[i] * table[i][j];
    }
    worst_G = std::max(worst_G, std::abs(G - (b.G_s[j] - b.Gc_s[j])));
    // q_s is the downward flux, including the beam
    worst_q = std::max(worst_q, std::abs(-flux - (b.q_s[j] - mu0 * b.Gc_s[j])));
  }
  EXPECT_LT(worst_G, 5e-6);
  EXPECT_LT(worst_q, 5e-6);
}

// Without scattering each ordinate is a single attenuated line integral whose source
// is known in closed form on a uniform suspension.
TEST(Perturbation, NonScatteringMatchesDirectLineIntegral) {
  const Params p = make_params(0.5, 0.0, 0.0, 30.0, 0.26);
  const BaseState b = uniform_base(p, 1025);
  const double l = 2.0, m = 1.5;
  CProfile N, Theta;
  sample_profiles(b, N, Theta);
  PerturbationOptions opt;
  const PerturbationSolver solver(b, l, m, opt);
  const auto mom = solver.solve(N, Theta);

  const Ordinates& o = solver.ordinates();
  const auto rule = gauss_legendre(30, 0.0, 1.0);
  auto Nf = [&](double z) { return cplx(std::cos(pi * z), 0.5 * z) * cplx(std::cos(0.3), std::sin(0.3)); };
  double worst = 0.0;
  for (int j = 0; j < b.size(); j += 64) {
    const double z = b.z[j];
    cplx G = 0.0;
    for (std::size_t i = 0; i < o.nu.size(); ++i) {
      const double nu = o.nu[i];
      if (nu > 0.0) continue;  // upward intensity has no source without scattering
      const double st = std::sqrt(1.0 - nu * nu);
      for (double phi : o.phi) {
        const double kappa = l * st * std::cos(phi) + m * st * std::sin(phi);
        auto Phi = [&](double zz) { return cplx(-p.tau_H * (1.0 - zz), kappa * zz) / nu; };
        // Psi(z) = int_z^1 -(1/nu) exp(-(Phi(z) - Phi(s))) r(s) ds, r = -(tau_H/nu) L N
        cplx psi = 0.0;
        const int cells = 16;
        for (int c = 0; c < cells; ++c) {
          const double a = z + (1.0 - z) * c / cells, w = (1.0 - z) / cells;
          for (std::size_t g = 0; g < rule.size(); ++g) {
            const double s = a + w * rule.nodes[g];
            const double L = p.I_D / pi * std::exp(-p.tau_H * (1.0 - s) / -nu);
            const cplx r = -p.tau_H / nu * L * Nf(s);
            psi += -w * rule.weights[g] * std::exp(-(Phi(z) - Phi(s))) * r;
          }
        }
        G += o.w_nu[i] * o.w_phi * psi;
      }
    }
    worst = std::max(worst, std::abs(G - mom.Gd1[j]));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Perturbation, LinearInTheDisturbance) {
  const Params p = make_params(1.0, 0.4, 0.4, 40.0);
  const BaseState b = taxis_base(p, 257);
  PerturbationOptions opt;
  opt.tol = 1e-12;
  const PerturbationSolver solver(b, 1.0, 2.0, opt);
  CProfile N1, T1, N2, T2;
  sample_profiles(b, N1, T1, 0.0);
  sample_profiles(b, N2, T2, 1.1);
  for (int j = 0; j < b.size(); ++j) N2[j] *= b.z[j];  // linearity does not need Theta' = N
  const cplx a(0.7, -0.2), c(-1.3, 0.4);
  CProfile N3(b.size()), T3(b.size());
  for (int j = 0; j < b.size(); ++j) {
    N3[j] = a * N1[j] + c * N2[j];
    T3[j] = a * T1[j] + c * T2[j];
  }
  const auto m1 = solver.solve(N1, T1), m2 = solver.solve(N2, T2), m3 = solver.solve(N3, T3);
  CProfile comb(b.size());
  for (int j = 0; j < b.size(); ++j) comb[j] = a * m1.Gd1[j] + c * m2.Gd1[j];
  EXPECT_LT(max_diff(comb, m3.Gd1), 1e-9 * std::max(1.0, max_abs(m3.Gd1)));
  for (int j = 0; j < b.size(); ++j) comb[j] = a * m1.P[j] + c * m2.P[j];
  EXPECT_LT(max_diff(comb, m3.P), 1e-9 * std::max(1.0, max_abs(m3.P)));
}

TEST(Perturbation, HorizontalFluxIsRotationInvariant) {
  const Params p = make_params(1.0, 0.4, 0.4, 40.0);
  const BaseState b = taxis_base(p, 257);
  CProfile N, Theta;
  sample_profiles(b, N, Theta);
  const double k = 2.5;
  const auto x = solve_perturbed_moments(b, N, Theta, k, 0.0);
  const auto y = solve_perturbed_moments(b, N, Theta, 0.0, k);
  const auto d = solve_perturbed_moments(b, N, Theta, k / std::sqrt(2.0), k / std::sqrt(2.0));
  for (int j = 0; j < b.size(); ++j) {
    const double hx = std::norm(x.P[j]) + std::norm(x.Q[j]);
    EXPECT_NEAR(std::norm(y.P[j]) + std::norm(y.Q[j]), hx, 1e-12 * std::max(1.0, hx));
    EXPECT_NEAR(std::norm(d.P[j]) + std::norm(d.Q[j]), hx, 1e-12 * std::max(1.0, hx));
    EXPECT_NEAR(std::abs(y.Gd1[j] - x.Gd1[j]), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(d.Gd1[j] - x.Gd1[j]), 0.0, 1e-12);
  }
}

TEST(Perturbation, NoHorizontalFluxWithoutHorizontalStructure) {
  const Params p = make_params(0.5, 0.4, 0.0, 0.0);
  const BaseState b = uniform_base(p, 257);
  CProfile N, Theta;
  sample_profiles(b, N, Theta);
  const auto mom = solve_perturbed_moments(b, N, Theta, 0.0, 0.0);
  EXPECT_LT(max_abs(mom.P), 1e-14);
  EXPECT_LT(max_abs(mom.Q), 1e-14);
  EXPECT_GT(max_abs(mom.Gd1), 1e-3);
}

// Angular self-convergence in an integrated norm. Pointwise, thin regions (n_s ~ 1e-3)
// keep long grazing paths that no fixed rule resolves to 1e-6 at n_mu = 16.
TEST(Perturbation, PolarQuadratureConverges) {
  for (double tau_H : {0.5, 1.0}) {
    const Params p = make_params(tau_H, 0.4, 0.4, 40.0, 0.48);
    const BaseState b = taxis_base(p, 513);
    CProfile N(b.size()), Theta(b.size());
    for (int j = 0; j < b.size(); ++j) N[j] = b.n_s[j] * cplx(std::cos(pi * b.z[j]), 0.3);
    for (int j = b.size() - 2; j >= 0; --j) Theta[j] = Theta[j + 1] - 0.5 * b.h() * (N[j] + N[j + 1]);
    std::vector<PerturbationMoments> runs;
    for (int n_mu : {16, 32, 64}) {
      PerturbationOptions opt;
      opt.n_mu = n_mu;
      opt.tol = 1e-12;
      runs.push_back(solve_perturbed_moments(b, N, Theta, 2.0, 1.0, opt));
    }
    auto l1 = [&](const CProfile& x, const CProfile& y) {
      double s = 0.0;
      for (int j = 0; j < b.size(); ++j) s += std::abs(x[j] - y[j]) * b.h();
      return s;
    };
    const double coarse = l1(runs[0].Gd1, runs[1].Gd1), fine = l1(runs[1].Gd1, runs[2].Gd1);
    EXPECT_LT(fine, 0.2 * coarse) << "tau_H=" << tau_H;
    EXPECT_LT(fine, 1e-3 * max_abs(runs[2].Gd1)) << "tau_H=" << tau_H;
  }
}

TEST(Perturbation, WarmStartReachesSameMoments) {
  const Params p = make_params(1.0, 0.4, 0.4, 40.0);
  const BaseState b = taxis_base(p, 257);
  PerturbationOptions opt;
  opt.tol = 1e-12;
  const PerturbationSolver solver(b, 1.0, 0.5, opt);
  CProfile N, Theta;
  sample_profiles(b, N, Theta);
  const auto cold = solver.solve(N, Theta);
  for (auto& v : N) v *= 1.01;
  for (auto& v : Theta) v *= 1.01;
  const auto warm = solver.solve(N, Theta, &cold);
  const auto fresh = solver.solve(N, Theta);
  EXPECT_LT(warm.iterations, fresh.iterations);
  EXPECT_LT(max_diff(warm.Gd1, fresh.Gd1), 1e-10);
  EXPECT_LT(max_diff(warm.S, fresh.S), 1e-10);
}

TEST(Perturbation, RejectsMismatchedProfiles) {
  const Params p = make_params(0.5, 0.4, 0.0, 0.0);
  const BaseState b = uniform_base(p, 129);
  const CProfile short_profile(10, 0.0), ok(b.size(), 0.0);
  EXPECT_THROW(solve_perturbed_moments(b, short_profile, ok, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(perturbed_collimated(b, short_profile, p), std::invalid_argument);
}

TEST(Perturbation, NoDiffusePerturbationWithoutScatteringOrDiffuseLight) {
  const Params p = make_params(0.5, 0.0, 0.0, 40.0, 0.0);
  const BaseState b = uniform_base(p, 129);
  CProfile N, Theta;
  sample_profiles(b, N, Theta);
  const auto mom = solve_perturbed_moments(b, N, Theta, 2.0, 1.0);
  EXPECT_EQ(max_abs(mom.Gd1), 0.0);
  EXPECT_EQ(max_abs(mom.P), 0.0);
  EXPECT_EQ(max_abs(mom.Q), 0.0);
  EXPECT_GT(max_abs(mom.Gc1), 0.0);
}
