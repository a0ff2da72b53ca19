#include "cqed/models.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace cqed;

namespace {

double rate(const SystemParams& p) { return emission_rate(steady_state(build_model(p))); }

// Laser detuning of the largest local maximum on each side of zero.
std::pair<double, double> side_peaks(const std::vector<double>& x, const std::vector<double>& y) {
  double best_neg = -1.0, best_pos = -1.0, x_neg = 0.0, x_pos = 0.0;
  for (std::size_t k = 1; k + 1 < y.size(); ++k) {
    if (!(y[k] > y[k - 1] && y[k] >= y[k + 1])) continue;
    if (x[k] < 0 && y[k] > best_neg) best_neg = y[k], x_neg = x[k];
    if (x[k] > 0 && y[k] > best_pos) best_pos = y[k], x_pos = x[k];
  }
  return {x_neg, x_pos};
}

// Two-mode linear response with Dc = Da = delta: |D|^2 = |(kappa - i d)(gamma - i d) + g^2|^2 is
// minimal at d^2 = g^2 - (kappa^2 + gamma^2)/2.
double damped_normal_mode(double g, double kappa, double gamma) {
  return std::sqrt(g * g - 0.5 * (kappa * kappa + gamma * gamma));
}

std::vector<double> weak_drive_scan(int atoms, const std::vector<double>& grid) {
  SystemParams p = reference_params(atoms, 3);
  p.omega_drive = two_pi_mhz(0.05);
  std::vector<double> out;
  for (double d : grid) {
    p.delta_c = d;
    for (double& a : p.delta_a) a = d;
    out.push_back(rate(p));
  }
  return out;
}

}  // namespace

TEST(SystemParams, ValidationRejectsBadRates) {
  SystemParams p = reference_params(1);
  p.kappa_oc = p.kappa * 1.1;
  EXPECT_THROW(p.validate(), ParameterError);
  p = reference_params(1);
  p.gamma = 0.0;
  EXPECT_THROW(build_model(p), ParameterError);
  p = reference_params(1);
  p.g = -1.0;
  EXPECT_THROW(build_model(p), ParameterError);
  EXPECT_THROW(build_model(reference_params(3)), ParameterError);
}

TEST(ExcitationSpectrum, SingleAtomNormalModes) {
  const auto p = reference_params(1);
  const auto s = excitation_spectrum(p, 1);
  ASSERT_EQ(s.energies.size(), 2u);
  EXPECT_NEAR(s.energies[0] / -p.g, 1.0, 1e-12);
  EXPECT_NEAR(s.energies[1] / p.g, 1.0, 1e-12);
}

TEST(ExcitationSpectrum, TwoAtomsOneExcitation) {
  const auto p = reference_params(2);
  const auto s = excitation_spectrum(p, 1);
  ASSERT_EQ(s.energies.size(), 3u);
  const double r2 = std::numbers::sqrt2;
  EXPECT_NEAR(s.energies[0] / (-r2 * p.g), 1.0, 1e-12);
  EXPECT_NEAR(s.energies[1] / p.g, 0.0, 1e-12);
  EXPECT_NEAR(s.energies[2] / (r2 * p.g), 1.0, 1e-12);
  // The unshifted state is the antisymmetric atomic state with an empty cavity.
  EXPECT_NEAR(std::abs(s.amplitude(1, "1gg")), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(s.amplitude(1, "0eg") + s.amplitude(1, "0ge")), 0.0, 1e-12);
  EXPECT_NEAR(std::norm(s.amplitude(1, "0eg")), 0.5, 1e-12);
  EXPECT_EQ(s.exchange_parity[1], -1);
}

TEST(ExcitationSpectrum, TwoAtomsTwoExcitations) {
  const auto p = reference_params(2);
  const auto s = excitation_spectrum(p, 2);
  ASSERT_EQ(s.energies.size(), 4u);
  const double r6 = std::sqrt(6.0);
  EXPECT_NEAR(s.energies[0] / (-r6 * p.g), 1.0, 1e-12);
  EXPECT_NEAR(s.energies[1] / p.g, 0.0, 1e-12);
  EXPECT_NEAR(s.energies[2] / p.g, 0.0, 1e-12);
  EXPECT_NEAR(s.energies[3] / (r6 * p.g), 1.0, 1e-12);

  int symmetric = -1, antisymmetric = -1;
  for (int k : {1, 2}) (s.exchange_parity[k] > 0 ? symmetric : antisymmetric) = k;
  ASSERT_GE(symmetric, 0);
  ASSERT_GE(antisymmetric, 0);
  EXPECT_NEAR(std::norm(s.amplitude(symmetric, "2gg")), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(std::norm(s.amplitude(symmetric, "0ee")), 2.0 / 3.0, 1e-12);
  const Complex one_s = (s.amplitude(symmetric, "1eg") + s.amplitude(symmetric, "1ge")) / std::numbers::sqrt2;
  EXPECT_NEAR(std::abs(one_s), 0.0, 1e-12);
  // |1A> is the other zero-energy state.
  EXPECT_NEAR(std::norm(s.amplitude(antisymmetric, "1eg")), 0.5, 1e-12);
  EXPECT_NEAR(std::abs(s.amplitude(antisymmetric, "1eg") + s.amplitude(antisymmetric, "1ge")), 0.0, 1e-12);
}

TEST(ExcitationSpectrum, EigenvaluesComeInPairs) {
  for (int atoms = 1; atoms <= 2; ++atoms)
    for (int n = 1; n <= 3; ++n) {
      const auto s = excitation_spectrum(reference_params(atoms), n);
      const auto m = s.energies.size();
      for (std::size_t k = 0; k < m; ++k) EXPECT_NEAR(s.energies[k], -s.energies[m - 1 - k], 1e-6);
    }
}

TEST(ExcitationSpectrum, ManifoldBeyondTruncationThrows) {
  EXPECT_THROW(excitation_spectrum(reference_params(2, 2), 3), ParameterError);
  EXPECT_THROW(excitation_spectrum(reference_params(2, 2), 0), ParameterError);
}

TEST(Models, ExcitationNumberCommutesWithDriveFreeHamiltonian) {
  for (int atoms = 1; atoms <= 2; ++atoms) {
    SystemParams p = reference_params(atoms, 4);
    p.omega_drive = 0.0;
    p.delta_c = two_pi_mhz(1.3);
    for (double& d : p.delta_a) d = two_pi_mhz(-0.7);
    const auto h = build_model(p).hamiltonian();
    EXPECT_EQ(commutator(excitation_number(p.layout()), h).matrix().norm(), 0.0);
  }
}

TEST(Models, UncoupledAtomLeavesCavityEmpty) {
  SystemParams p = reference_params(1, 3);
  p.g = 0.0;
  EXPECT_LT(mean_photon_number(steady_state(build_model(p))), 1e-12);
}

TEST(Models, InPhaseSteadyStateIsExchangeSymmetric) {
  const auto p = reference_params(2, 5);
  const auto rho = steady_state(build_model(p));
  const Matrix swap = atom_swap(p.layout()).matrix();
  EXPECT_LT((swap * rho.matrix() - rho.matrix() * swap).norm(), 1e-9);
  const Matrix relabelled = swap * rho.matrix() * swap;
  EXPECT_LT((relabelled - rho.matrix()).norm(), 1e-9);
}

TEST(Models, OutOfPhaseWeakDrivePopulatesAntisymmetricState) {
  SystemParams p = reference_params(2, 3);
  p.omega_drive = two_pi_mhz(0.05);
  p.phi = std::numbers::pi;
  const auto rho = steady_state(build_model(p)).matrix();
  const auto l = p.layout();
  const int eg = l.index(0, {1, 0}), ge = l.index(0, {0, 1});
  Vector sym = Vector::Zero(l.dimension()), anti = Vector::Zero(l.dimension());
  sym(eg) = sym(ge) = 1.0 / std::numbers::sqrt2;
  anti(eg) = 1.0 / std::numbers::sqrt2;
  anti(ge) = -1.0 / std::numbers::sqrt2;
  const double ps = (sym.adjoint() * rho * sym)(0).real();
  const double pa = (anti.adjoint() * rho * anti)(0).real();
  EXPECT_GT(pa, 0.0);
  EXPECT_LT(ps, 0.01 * pa);
}

TEST(Models, PhaseIsPeriodic) {
  SystemParams p = reference_params(2, 4);
  p.phi = 1.1;
  const auto a = steady_state(build_model(p));
  p.phi += 2.0 * std::numbers::pi;
  const auto b = steady_state(build_model(p));
  EXPECT_NEAR(emission_rate(a), emission_rate(b), 1e-12 * emission_rate(a));
  EXPECT_NEAR(g2_zero(a), g2_zero(b), 1e-12 * g2_zero(a));
}

TEST(Models, WeakDriveScanPeaksAtDampedNormalModes) {
  std::vector<double> grid;
  for (int k = -160; k <= 160; ++k) grid.push_back(two_pi_mhz(0.1 * k));
  const double step = two_pi_mhz(0.1);
  const auto p = reference_params(1);
  for (int atoms = 1; atoms <= 2; ++atoms) {
    const auto [neg, pos] = side_peaks(grid, weak_drive_scan(atoms, grid));
    const double expected = damped_normal_mode(std::sqrt(atoms) * p.g, p.kappa, p.gamma);
    EXPECT_NEAR(pos, expected, step) << atoms << " atom(s)";
    EXPECT_NEAR(neg, -expected, step) << atoms << " atom(s)";
    // Damping pulls the maxima inside +-sqrt(N) g.
    EXPECT_LT(pos, std::sqrt(atoms) * p.g);
  }
}

TEST(Models, ThermalFitParametersGiveTwoPeakScan) {
  // Single atom, Omega = 2pi x 300 kHz, trap-bottom atom 2.89 MHz blue of the cavity and
  // Boltzmann-shifted detunings with tau = 2pi x 2.28 MHz.
  SystemParams p = reference_params(1, 4);
  p.omega_drive = two_pi_mhz(0.3);
  const double offset = two_pi_mhz(2.89), tau = two_pi_mhz(2.28);
  // Midpoint sum in r, independent of the library quadrature.
  auto thermal_rate = [&](double delta) {
    double s = 0.0, norm = 0.0;
    const double dr = 0.01;
    for (double r = dr / 2; r < 6.0; r += dr) {
      const double w = r * r * std::exp(-r * r);
      p.delta_c = delta;
      p.delta_a = {delta - offset + tau * r * r};
      s += w * rate(p);
      norm += w;
    }
    return s / norm;
  };
  std::vector<double> grid, y;
  for (int k = -24; k <= 24; ++k) {
    grid.push_back(two_pi_mhz(0.5 * k));
    y.push_back(thermal_rate(grid.back()));
  }
  const auto [neg, pos] = side_peaks(grid, y);
  ASSERT_LT(neg, 0.0);
  ASSERT_GT(pos, 0.0);
  double valley = 1e300;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (grid[k] > neg && grid[k] < pos) valley = std::min(valley, y[k]);
  const double lower_peak = std::min(y[std::find(grid.begin(), grid.end(), neg) - grid.begin()],
                                     y[std::find(grid.begin(), grid.end(), pos) - grid.begin()]);
  EXPECT_LT(valley, 0.8 * lower_peak);
}

TEST(CavityDriven, EmptyCavityClosedForm) {
  SystemParams p = reference_params(0, 6);
  const double pump = two_pi_mhz(0.2);
  const double n = mean_photon_number(steady_state(cavity_driven(p, pump)));
  EXPECT_NEAR(n / (pump * pump / (p.kappa * p.kappa)), 1.0, 1e-9);
}

TEST(CavityDriven, ZeroCouplingMatchesEmptyCavity) {
  SystemParams p = reference_params(1, 4);
  p.g = 0.0;
  SystemParams empty = reference_params(0, 4);
  const double pump = two_pi_mhz(0.2);
  const double with_atom = mean_photon_number(steady_state(cavity_driven_single_atom(p, pump)));
  const double without = mean_photon_number(steady_state(cavity_driven(empty, pump)));
  EXPECT_NEAR(with_atom, without, 1e-12 * without);
}

TEST(CavityDriven, ResonantAtomSuppressesIntensity) {
  SystemParams p = reference_params(1, 3);
  const double pump = two_pi_mhz(0.01);
  const double with_atom = mean_photon_number(steady_state(cavity_driven_single_atom(p, pump)));
  const double empty = pump * pump / (p.kappa * p.kappa);
  const double two_c = p.g * p.g / (p.kappa * p.gamma);
  EXPECT_NEAR(empty / with_atom / ((1.0 + two_c) * (1.0 + two_c)), 1.0, 1e-3);
}

TEST(CavityParams, ApparatusValues) {
  const auto spec = reference_cavity();
  const auto d = derive_cavity_params(spec);
  EXPECT_NEAR(d.fsr_hz / 1e9, 301.0, 1.0);
  // Field decay from the finesse: half the intensity linewidth FSR / F.
  EXPECT_NEAR(to_mhz(d.kappa), 299'792'458.0 / (2 * 498e-6) / 55'000 / 2 / 1e6, 1e-9);
  EXPECT_NEAR(to_mhz(d.kappa_oc), 2.4, 0.05);
  ASSERT_TRUE(d.g_expected.has_value());
  EXPECT_NEAR(to_mhz(*d.g_expected), 7.8, 0.2);
}

TEST(CavityParams, CooperativityToOneDecimal) {
  EXPECT_NEAR(cooperativity(two_pi_mhz(7.6), two_pi_mhz(2.8), two_pi_mhz(3.0)), 3.44, 0.005);
  EXPECT_NEAR(cooperativity(two_pi_mhz(7.8), two_pi_mhz(2.8), two_pi_mhz(3.0)), 3.62, 0.005);
}

TEST(CavityParams, InconsistentLossBudgetThrows) {
  auto spec = reference_cavity();
  spec.t_oc_ppm = 200;
  EXPECT_THROW(derive_cavity_params(spec), ParameterError);
  spec = reference_cavity();
  spec.length = 0.0;
  EXPECT_THROW(derive_cavity_params(spec), ParameterError);
}
