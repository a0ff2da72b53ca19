#pragma once

// Driven Jaynes-Cummings / Tavis-Cummings models, excitation-manifold spectra and cavity
// parameters derived from mirror data.
//
// All rates and detunings are angular frequencies in rad/s. Detunings are
// Delta = omega_laser - omega_transition, which is the sign that makes
//     H = -Delta_c a^dag a - Delta_a sigma^+ sigma^- + ...
// the rotating-frame Hamiltonian.

#include "cqed/dynamics.hpp"
#include "cqed/operators.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqed {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Ordinary frequency in MHz -> angular frequency in rad/s.
constexpr double two_pi_mhz(double f_mhz) { return kTwoPi * f_mhz * 1e6; }
/// Angular frequency in rad/s -> ordinary frequency in MHz.
constexpr double to_mhz(double omega) { return omega / (kTwoPi * 1e6); }

class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct SystemParams {
  double g = 0.0;
  double kappa = 0.0;     // total cavity field decay
  double kappa_oc = 0.0;  // output-coupler share of kappa
  double gamma = 0.0;     // atomic polarisation decay
  double omega_drive = 0.0;
  double delta_c = 0.0;
  std::vector<double> delta_a;  // one per atom
  double phi = 0.0;
  int n_max = 6;

  int n_atoms() const { return static_cast<int>(delta_a.size()); }
  SpaceLayout layout() const { return {n_max, n_atoms()}; }

  void validate(bool allow_zero_coupling = false) const {
    if (!(g > 0.0) && !(allow_zero_coupling && g == 0.0)) throw ParameterError("g must be > 0");
    if (!(kappa > 0.0)) throw ParameterError("kappa must be > 0");
    if (!(gamma > 0.0)) throw ParameterError("gamma must be > 0");
    if (!(kappa_oc >= 0.0 && kappa_oc <= kappa))
      throw ParameterError("kappa_oc must lie in [0, kappa]");
    if (!std::isfinite(omega_drive) || !std::isfinite(delta_c) || !std::isfinite(phi))
      throw ParameterError("non-finite drive, detuning or phase");
    for (double d : delta_a)
      if (!std::isfinite(d)) throw ParameterError("non-finite atomic detuning");
    if (n_max < 1) throw ParameterError("n_max must be >= 1");
  }
};

/// (g, kappa, gamma) = 2pi x (7.6, 2.8, 3.0) MHz, kappa_oc = 2pi x 2.4 MHz,
/// Omega = 2pi x 920 kHz, everything resonant.
inline SystemParams reference_params(int n_atoms, int n_max = 6) {
  SystemParams p;
  p.g = two_pi_mhz(7.6);
  p.kappa = two_pi_mhz(2.8);
  p.kappa_oc = two_pi_mhz(2.4);
  p.gamma = two_pi_mhz(3.0);
  p.omega_drive = two_pi_mhz(0.92);
  p.delta_a.assign(static_cast<std::size_t>(n_atoms), 0.0);
  p.n_max = n_max;
  return p;
}

namespace detail {

// -Delta_c a^dag a - sum_j Delta_j s_j^+ s_j^- + g sum_j (s_j^+ a + a^dag s_j^-)
inline Operator bare_hamiltonian(const SystemParams& p) {
  const auto layout = p.layout();
  const auto a = annihilation(layout);
  Operator h = -p.delta_c * (a.adjoint() * a);
  for (int j = 0; j < p.n_atoms(); ++j) {
    const auto s = atomic_lowering(layout, j);
    h -= p.delta_a[j] * (s.adjoint() * s);
    h += p.g * (s.adjoint() * a + a.adjoint() * s);
  }
  return h;
}

inline std::vector<DecayChannel> standard_channels(const SystemParams& p) {
  const auto layout = p.layout();
  std::vector<DecayChannel> ch;
  for (int j = 0; j < p.n_atoms(); ++j) ch.push_back({p.gamma, atomic_lowering(layout, j)});
  ch.push_back({p.kappa, annihilation(layout)});
  return ch;
}

}  // namespace detail

/// H = -Dc a^dag a - Da s^+ s^- + g(a s^+ + a^dag s^-) + (Omega/2)(s^+ + s^-),
/// channels (gamma, s^-) and (kappa, a).
inline LindbladModel build_single_atom(const SystemParams& p) {
  p.validate(true);
  if (p.n_atoms() != 1) throw ParameterError("build_single_atom needs exactly one atomic detuning");
  const auto s = atomic_lowering(p.layout(), 0);
  Operator h = detail::bare_hamiltonian(p) + (0.5 * p.omega_drive) * (s + s.adjoint());
  return {h, detail::standard_channels(p)};
}

/// Two-atom Hamiltonian with all relative phases gauged onto atom 2's drive term:
/// (Omega/2)(s1^+ + s1^- + e^{i phi} s2^+ + e^{-i phi} s2^-).
inline LindbladModel build_two_atom(const SystemParams& p) {
  p.validate(true);
  if (p.n_atoms() != 2) throw ParameterError("build_two_atom needs exactly two atomic detunings");
  const auto layout = p.layout();
  const auto s1 = atomic_lowering(layout, 0);
  const auto s2 = atomic_lowering(layout, 1);
  const Complex e = std::polar(1.0, p.phi);
  Operator drive = (s1 + s1.adjoint()) + e * s2.adjoint() + std::conj(e) * s2;
  Operator h = detail::bare_hamiltonian(p) + (0.5 * p.omega_drive) * drive;
  return {h, detail::standard_channels(p)};
}

inline LindbladModel build_model(const SystemParams& p) {
  switch (p.n_atoms()) {
    case 1: return build_single_atom(p);
    case 2: return build_two_atom(p);
    default: throw ParameterError("models are defined for one or two atoms");
  }
}

/// Coherent cavity drive pump*(a + a^dag) instead of the transverse atom drive. Works for zero,
/// one or two atoms (all atoms couple with the same phase).
inline LindbladModel cavity_driven(const SystemParams& p, double pump) {
  if (!(p.kappa > 0.0)) throw ParameterError("kappa must be > 0");
  if (p.n_atoms() > 2) throw ParameterError("at most two atoms");
  const auto layout = p.layout();
  const auto a = annihilation(layout);
  Operator h = detail::bare_hamiltonian(p) + pump * (a + a.adjoint());
  return {h, detail::standard_channels(p)};
}

inline LindbladModel cavity_driven_single_atom(const SystemParams& p, double pump) {
  p.validate(true);
  if (p.n_atoms() != 1) throw ParameterError("cavity_driven_single_atom needs one atom");
  return cavity_driven(p, pump);
}

// ---------------------------------------------------------------------------------------------

struct ManifoldSpectrum {
  int excitations = 0;
  std::vector<double> energies;          // ascending, rad/s relative to n * hbar * omega
  std::vector<int> basis;                // layout indices spanning the manifold
  std::vector<std::string> basis_labels; // e.g. "2gg"
  Matrix eigenvectors;                   // column k belongs to energies[k], rows follow `basis`
  std::vector<int> exchange_parity;      // +1/-1 for two atoms, 0 otherwise

  /// Amplitude <label|v_k>.
  Complex amplitude(int k, const std::string& label) const {
    for (std::size_t r = 0; r < basis_labels.size(); ++r)
      if (basis_labels[r] == label) return eigenvectors(static_cast<Eigen::Index>(r), k);
    throw std::out_of_range("basis state " + label + " not in manifold");
  }
};

/// Drive-free resonant (Dc = Da = 0) Hamiltonian restricted to the manifold with
/// `n_excitations` quanta. Degenerate eigenvalues are resolved into states of definite
/// atom-exchange parity when there are two atoms.
inline ManifoldSpectrum excitation_spectrum(const SystemParams& params, int n_excitations) {
  if (n_excitations < 1) throw ParameterError("manifold needs at least one excitation");
  if (n_excitations > params.n_max)
    throw ParameterError("manifold with " + std::to_string(n_excitations) +
                         " excitations exceeds truncation n_max=" + std::to_string(params.n_max));
  if (!(params.g > 0.0)) throw ParameterError("g must be > 0");
  SystemParams p = params;
  p.omega_drive = 0.0;
  p.delta_c = 0.0;
  std::fill(p.delta_a.begin(), p.delta_a.end(), 0.0);
  const auto layout = p.layout();
  const Matrix h = detail::bare_hamiltonian(p).matrix();

  ManifoldSpectrum out;
  out.excitations = n_excitations;
  for (int i = 0; i < layout.dimension(); ++i) {
    if (layout.excitations(i) == n_excitations) {
      out.basis.push_back(i);
      out.basis_labels.push_back(layout.label(i));
    }
  }
  const auto m = static_cast<Eigen::Index>(out.basis.size());
  Matrix block(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) block(r, c) = h(out.basis[r], out.basis[c]);

  Eigen::SelfAdjointEigenSolver<Matrix> es(block);
  Eigen::VectorXd evals = es.eigenvalues();
  Matrix evecs = es.eigenvectors();

  out.exchange_parity.assign(static_cast<std::size_t>(m), 0);
  if (layout.n_atoms() == 2) {
    const Matrix swap_full = atom_swap(layout).matrix();
    Matrix swap(m, m);
    for (Eigen::Index r = 0; r < m; ++r)
      for (Eigen::Index c = 0; c < m; ++c) swap(r, c) = swap_full(out.basis[r], out.basis[c]);
    const double tol = 1e-9 * std::max(1.0, evals.cwiseAbs().maxCoeff());
    Eigen::Index start = 0;
    while (start < m) {
      Eigen::Index stop = start + 1;
      while (stop < m && std::abs(evals(stop) - evals(start)) <= tol) ++stop;
      const Eigen::Index len = stop - start;
      const Matrix sub = evecs.middleCols(start, len);
      Eigen::SelfAdjointEigenSolver<Matrix> ps(sub.adjoint() * swap * sub);
      evecs.middleCols(start, len) = sub * ps.eigenvectors();
      for (Eigen::Index k = 0; k < len; ++k)
        out.exchange_parity[static_cast<std::size_t>(start + k)] = ps.eigenvalues()(k) > 0 ? 1 : -1;
      start = stop;
    }
  }
  // Fix the global phase: largest-magnitude component real and positive.
  for (Eigen::Index k = 0; k < m; ++k) {
    Eigen::Index imax = 0;
    evecs.col(k).cwiseAbs().maxCoeff(&imax);
    const Complex ph = evecs(imax, k) / std::abs(evecs(imax, k));
    evecs.col(k) /= ph;
  }
  out.energies.assign(evals.data(), evals.data() + m);
  out.eigenvectors = evecs;
  return out;
}

// ---------------------------------------------------------------------------------------------

namespace constants {
inline constexpr double c = 299'792'458.0;            // m/s
inline constexpr double hbar = 1.054'571'817e-34;     // J s
inline constexpr double epsilon0 = 8.854'187'8128e-12;  // F/m
}  // namespace constants

struct CavitySpec {
  double length = 0.0;      // m
  double waist = 0.0;       // m, 1/e^2 intensity radius
  double finesse = 0.0;
  double t_oc_ppm = 0.0;    // output-coupler transmission
  double t_2_ppm = 0.0;     // second mirror transmission
  double wavelength = 0.0;  // m
  double gamma = 0.0;       // atomic polarisation decay, rad/s
  std::optional<double> dipole_moment;  // C m, enables g_expected
  std::optional<double> coupling;       // rad/s, overrides g_expected in C

  void validate() const {
    if (!(length > 0 && waist > 0 && finesse > 0 && t_oc_ppm > 0 && t_2_ppm > 0 && wavelength > 0 &&
          gamma > 0))
      throw ParameterError("cavity specification values must all be positive");
    const double budget = kTwoPi / finesse;
    if ((t_oc_ppm + t_2_ppm) * 1e-6 > budget)
      throw ParameterError("inconsistent loss budget: T_OC + T_2 = " +
                           std::to_string(t_oc_ppm + t_2_ppm) + " ppm exceeds 2pi/F = " +
                           std::to_string(budget * 1e6) + " ppm");
  }
};

struct DerivedCavityParams {
  double fsr_hz = 0.0;
  double kappa = 0.0;     // rad/s, field decay
  double kappa_oc = 0.0;  // rad/s
  std::optional<double> g_expected;   // rad/s
  std::optional<double> cooperativity;
};

inline double cooperativity(double g, double kappa, double gamma) {
  return g * g / (2.0 * kappa * gamma);
}

inline double mode_volume(double waist, double length) {
  return std::numbers::pi / 4.0 * waist * waist * length;
}

/// FSR = c/2L; intensity linewidth FSR/F, so the field decays at kappa = pi * FSR / F (rad/s).
/// kappa_oc is the output-coupler share of the round-trip loss 2pi/F.
inline DerivedCavityParams derive_cavity_params(const CavitySpec& s) {
  s.validate();
  DerivedCavityParams d;
  d.fsr_hz = constants::c / (2.0 * s.length);
  d.kappa = std::numbers::pi * d.fsr_hz / s.finesse;
  d.kappa_oc = d.kappa * (s.t_oc_ppm * 1e-6) / (kTwoPi / s.finesse);
  if (s.dipole_moment) {
    const double omega = kTwoPi * constants::c / s.wavelength;
    const double v = mode_volume(s.waist, s.length);
    d.g_expected = std::sqrt(omega / (2.0 * constants::epsilon0 * v * constants::hbar)) * *s.dipole_moment;
  }
  const auto g = s.coupling ? s.coupling : d.g_expected;
  if (g) d.cooperativity = cooperativity(*g, d.kappa, s.gamma);
  return d;
}

/// Mirror data of the apparatus: L = 498 um, w = 30 um, F = 55,000, T_OC = 100 ppm,
/// T_2 = 4 ppm, 780 nm, gamma = 2pi x 3.0 MHz, cycling-transition dipole moment.
inline CavitySpec reference_cavity() {
  CavitySpec s;
  s.length = 498e-6;
  s.waist = 30e-6;
  s.finesse = 55'000;
  s.t_oc_ppm = 100;
  s.t_2_ppm = 4;
  s.wavelength = 780.241e-9;
  s.gamma = two_pi_mhz(3.0);
  s.dipole_moment = 2.534e-29;
  return s;
}

}  // namespace cqed
