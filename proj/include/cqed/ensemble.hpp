#pragma once

// Imperfection models: Boltzmann averaging over light-shift-distributed atomic detunings and
// the incoherent mixture produced by imperfect optical pumping.

#include "cqed/dynamics.hpp"
#include "cqed/models.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqed {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss rule for the probability measure (2/sqrt(pi)) sqrt(u) exp(-u) du on [0, inf).
///
/// The thermal average (4/sqrt(pi)) int_0^inf f(D + tau r^2) r^2 exp(-r^2) dr becomes
/// int f(D + tau u) dmu(u) after u = r^2, which is generalised Gauss-Laguerre with alpha = 1/2.
/// Nodes and weights come from the Golub-Welsch eigenproblem of the Jacobi matrix; with the
/// measure normalised, the weights are the squared first eigenvector components.
inline QuadratureRule thermal_quadrature(int order) {
  if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
  constexpr double alpha = 0.5;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(order, order);
  for (int k = 0; k < order; ++k) {
    jac(k, k) = 2.0 * k + alpha + 1.0;
    if (k > 0) {
      const double b = std::sqrt(k * (k + alpha));
      jac(k, k - 1) = b;
      jac(k - 1, k) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  QuadratureRule rule;
  for (int k = 0; k < order; ++k) {
    rule.nodes.push_back(es.eigenvalues()(k));
    const double v0 = es.eigenvectors()(0, k);
    rule.weights.push_back(v0 * v0);
  }
  return rule;
}

struct ThermalParams {
  double tau = 0.0;            // rad/s, light-shift-scaled thermal energy
  double base_detuning = 0.0;  // rad/s, Delta_a of an atom at the trap bottom
  int quad_order = 32;

  void validate() const {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw ParameterError("thermal tau must be >= 0");
    if (quad_order < 8) throw ParameterError("quadrature order must be >= 8");
  }
};

struct PumpingParams {
  double eta = 1.0;

  void validate() const {
    if (!(eta >= 0.0 && eta <= 1.0)) throw ParameterError("pumping efficiency must lie in [0, 1]");
  }
};

class ThermalConvergenceError : public NumericalFailure {
public:
  ThermalConvergenceError(double coarse, double fine, int order)
      : NumericalFailure("thermal average not converged: " + std::to_string(coarse) + " at " +
                         std::to_string(order) + " nodes vs " + std::to_string(fine) + " at " +
                         std::to_string(2 * order)),
        coarse_(coarse),
        fine_(fine) {}
  double coarse() const { return coarse_; }
  double fine() const { return fine_; }

private:
  double coarse_, fine_;
};

inline constexpr double kThermalRelTol = 1e-4;

namespace detail {
template <class F>
double apply_rule(const QuadratureRule& rule, F& f, const ThermalParams& t) {
  double s = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k)
    s += rule.weights[k] * f(t.base_detuning + t.tau * rule.nodes[k]);
  return s;
}
}  // namespace detail

/// <f> over Boltzmann-distributed detunings base + tau * r^2. With `check_convergence`, the
/// result at quad_order is compared against 2 * quad_order nodes.
template <class F>
double thermal_average(F&& f, const ThermalParams& t, bool check_convergence = true) {
  t.validate();
  if (t.tau == 0.0) return f(t.base_detuning);
  const double coarse = detail::apply_rule(thermal_quadrature(t.quad_order), f, t);
  if (check_convergence) {
    const double fine = detail::apply_rule(thermal_quadrature(2 * t.quad_order), f, t);
    if (std::abs(fine - coarse) > kThermalRelTol * std::max(std::abs(fine), std::abs(coarse)))
      throw ThermalConvergenceError(coarse, fine, t.quad_order);
  }
  return coarse;
}

enum class ThermalMode {
  Common,       // both atoms share one sampled detuning
  Independent,  // each atom samples its own detuning around the same base
};

inline const char* to_string(ThermalMode m) {
  return m == ThermalMode::Common ? "common" : "independent";
}

/// Two-atom average of f(d1, d2). Independent mode uses the tensor-product rule of order
/// `t.quad_order` per axis; pass `symmetric` when f(d1, d2) == f(d2, d1) to halve the work.
template <class F>
double thermal_average_pair(F&& f, const ThermalParams& t, ThermalMode mode, bool symmetric = false) {
  t.validate();
  if (t.tau == 0.0) return f(t.base_detuning, t.base_detuning);
  if (mode == ThermalMode::Common) {
    auto diag = [&](double d) { return f(d, d); };
    return thermal_average(diag, t, false);
  }
  const auto rule = thermal_quadrature(t.quad_order);
  const auto n = rule.nodes.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double di = t.base_detuning + t.tau * rule.nodes[i];
    for (std::size_t j = symmetric ? i : 0; j < n; ++j) {
      const double dj = t.base_detuning + t.tau * rule.nodes[j];
      const double w = rule.weights[i] * rule.weights[j] * (symmetric && j != i ? 2.0 : 1.0);
      s += w * f(di, dj);
    }
  }
  return s;
}

/// Thermally averaged single-atom emission over a laser-detuning grid. For each grid value
/// delta the cavity sits at Delta_c = delta and an atom at the trap bottom is blue-detuned from
/// the cavity by tau (Delta_a = delta - tau before thermal shifts). `thermal.base_detuning`
/// is ignored.
inline std::vector<double> spectrum_with_temperature(const SystemParams& params,
                                                     const ThermalParams& thermal,
                                                     std::span<const double> detuning_grid,
                                                     RateConstant rc = RateConstant::nominal()) {
  if (params.n_atoms() != 1) throw ParameterError("spectrum_with_temperature is single-atom");
  std::vector<double> out;
  out.reserve(detuning_grid.size());
  for (double delta : detuning_grid) {
    SystemParams p = params;
    p.delta_c = delta;
    ThermalParams t = thermal;
    t.base_detuning = delta - thermal.tau;
    auto rate = [&](double da) {
      p.delta_a = {da};
      return emission_rate(steady_state(build_single_atom(p)), rc);
    };
    out.push_back(thermal_average(rate, t, false));
  }
  return out;
}

/// <R_2> = eta^2 <R_2'> + 2 eta (1 - eta) <R_1>; the no-atom branch emits nothing.
inline double mixture_rate(double r2_full, double r1, const PumpingParams& pumping) {
  pumping.validate();
  if (r2_full < 0.0 || r1 < 0.0) throw std::invalid_argument("rates must be >= 0");
  const double eta = pumping.eta;
  return eta * eta * r2_full + 2.0 * eta * (1.0 - eta) * r1;
}

/// One member of an incoherent mixture: its probability, emission rate R and unnormalised
/// correlation R^2 g2(tau) in the same rate units.
struct CorrelationComponent {
  double probability = 0.0;
  double rate = 0.0;
  std::vector<double> g2_unnormalized;
};

inline CorrelationComponent make_component(double probability, const UnnormalizedCorrelation& u,
                                           RateConstant rc = RateConstant::nominal()) {
  CorrelationComponent c;
  c.probability = probability;
  c.rate = rc.per_second * u.mean_photons;
  for (double v : u.g2_unnormalized) c.g2_unnormalized.push_back(rc.per_second * rc.per_second * v);
  return c;
}

class ZeroMixedRate : public std::runtime_error {
public:
  ZeroMixedRate() : std::runtime_error("mixture has zero total emission rate") {}
};

/// Pools unnormalised correlations of an incoherent mixture:
/// g2_mix = (sum p_i G2_i) / (sum p_i R_i)^2.
inline CorrelationSeries mixture_g2(std::span<const CorrelationComponent> components,
                                    std::vector<double> taus) {
  double psum = 0.0, rate = 0.0;
  for (const auto& c : components) {
    if (c.probability < 0.0) throw std::invalid_argument("negative mixture probability");
    if (c.g2_unnormalized.size() != taus.size())
      throw std::invalid_argument("component correlation length does not match tau grid");
    psum += c.probability;
    rate += c.probability * c.rate;
  }
  if (psum > 1.0 + 1e-12) throw std::invalid_argument("mixture probabilities sum to more than 1");
  if (!(rate > 0.0)) throw ZeroMixedRate();
  CorrelationSeries out{std::move(taus), {}};
  out.values.assign(out.taus.size(), 0.0);
  for (const auto& c : components)
    for (std::size_t k = 0; k < out.values.size(); ++k)
      out.values[k] += c.probability * c.g2_unnormalized[k];
  for (double& v : out.values) v /= rate * rate;
  return out;
}

}  // namespace cqed
