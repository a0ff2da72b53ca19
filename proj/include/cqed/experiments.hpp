#pragma once

// Scan orchestration: experiment configurations, the figure presets, per-point evaluation with
// imperfection models and CSV datasets.

#include "cqed/dynamics.hpp"
#include "cqed/ensemble.hpp"
#include "cqed/lattice.hpp"
#include "cqed/models.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace cqed::experiment {

inline constexpr const char* kCodeVersion = "cqed 1.0.0";

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class Kind {
  PhiRate,          // emission rate vs interatomic phase
  PhiG2,            // g2(0) vs interatomic phase
  TauG2,            // g2(tau) at fixed phase
  DetuningRate,     // single- and two-atom emission vs laser detuning
  ThermalSpectrum,  // single-atom emission vs detuning for several temperature parameters
  Baseline,         // single-atom rate, one row
};

enum class Axis { None, Phi, Sites, Detuning, Tau };

enum class RateConstantChoice { Nominal, OutputCoupler };

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::PhiRate: return "phi_rate";
    case Kind::PhiG2: return "phi_g2";
    case Kind::TauG2: return "tau_g2";
    case Kind::DetuningRate: return "detuning_rate";
    case Kind::ThermalSpectrum: return "thermal_spectrum";
    case Kind::Baseline: return "baseline";
  }
  return "?";
}

inline const char* to_string(Axis a) {
  switch (a) {
    case Axis::None: return "none";
    case Axis::Phi: return "phi";
    case Axis::Sites: return "sites";
    case Axis::Detuning: return "detuning";
    case Axis::Tau: return "tau";
  }
  return "?";
}

struct ExperimentConfig {
  std::string name = "custom";
  Kind kind = Kind::PhiRate;
  SystemParams system = reference_params(2);

  bool thermal_enabled = true;
  ThermalParams thermal{two_pi_mhz(2.28), 0.0, 32};
  // Trap-bottom atom sits this far blue of its configured detuning before thermal shifts.
  double thermal_offset = two_pi_mhz(2.89);
  ThermalMode thermal_mode = ThermalMode::Independent;
  int pair_quad_order = 16;

  bool pumping_enabled = true;
  PumpingParams pumping{0.87};

  bool ideal_only = false;
  bool include_single_atom_column = false;
  RateConstantChoice rate_constant = RateConstantChoice::Nominal;

  Axis axis = Axis::Phi;
  std::vector<double> grid;  // phi in rad, detuning in rad/s, tau in s
  std::vector<lattice::SiteDifference> sites;
  std::vector<double> thermal_taus;  // rad/s, ThermalSpectrum columns

  std::string output_path;
  int threads = 1;
  std::uint64_t seed = 0;

  RateConstant rate() const {
    return rate_constant == RateConstantChoice::Nominal ? RateConstant::nominal()
                                                        : RateConstant::output_coupler(system.kappa_oc);
  }

  bool thermal_active() const { return !ideal_only && thermal_enabled && thermal.tau > 0.0; }
  bool pumping_active() const { return !ideal_only && pumping_enabled; }
  bool imperfect() const { return !ideal_only && (thermal_enabled || pumping_enabled); }

  std::size_t n_points() const {
    if (axis == Axis::None) return 1;
    return axis == Axis::Sites ? sites.size() : grid.size();
  }

  void validate() const {
    try {
      system.validate();
      thermal.validate();
      pumping.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    const int na = system.n_atoms();
    const bool two = kind == Kind::PhiRate || kind == Kind::PhiG2 || kind == Kind::TauG2 ||
                     kind == Kind::DetuningRate;
    if (two && na != 2) throw ConfigError(std::string(to_string(kind)) + " needs system.n_atoms = 2");
    if (!two && na != 1) throw ConfigError(std::string(to_string(kind)) + " needs system.n_atoms = 1");
    if (pair_quad_order < 8) throw ConfigError("thermal.pair_order must be >= 8");
    if (threads < 1) throw ConfigError("run.threads must be >= 1");

    Axis expected = Axis::None;
    switch (kind) {
      case Kind::PhiRate:
      case Kind::PhiG2:
        if (axis != Axis::Phi && axis != Axis::Sites)
          throw ConfigError("phase experiments scan exactly one axis: phi or sites");
        expected = axis;
        break;
      case Kind::TauG2: expected = Axis::Tau; break;
      case Kind::DetuningRate:
      case Kind::ThermalSpectrum: expected = Axis::Detuning; break;
      case Kind::Baseline: expected = Axis::None; break;
    }
    if (axis != expected)
      throw ConfigError(std::string("scan axis '") + to_string(axis) + "' does not fit experiment " +
                        to_string(kind) + " (expected '" + to_string(expected) + "')");
    if (axis == Axis::Sites) {
      if (sites.empty()) throw ConfigError("scan grid is empty");
      for (const auto& s : sites)
        if (s.dnx == 0 && s.dny == 0) throw ConfigError("site difference (0, 0) is not a pair");
    } else if (axis != Axis::None) {
      if (grid.empty()) throw ConfigError("scan grid is empty");
      for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw ConfigError("scan grid must be strictly ascending");
      if (axis == Axis::Tau && grid.front() < 0.0) throw ConfigError("tau grid must be >= 0");
    }
    if (kind == Kind::ThermalSpectrum) {
      if (thermal_taus.empty()) throw ConfigError("thermal_spectrum needs scan.thermal_taus");
      for (double t : thermal_taus)
        if (!(t >= 0.0)) throw ConfigError("thermal_taus must be >= 0");
    }
  }
};

// ---------------------------------------------------------------------------------------------
// Presets.

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out;
  for (int k = 0; k < n; ++k) out.push_back(n == 1 ? a : a + (b - a) * k / (n - 1));
  return out;
}

/// n points k * 2pi / n, k = 0..n-1 (covers [0, 2pi)).
inline std::vector<double> phase_grid(int n) {
  std::vector<double> out;
  for (int k = 0; k < n; ++k) out.push_back(2.0 * std::numbers::pi * k / n);
  return out;
}

inline std::vector<double> detuning_grid_mhz(double from, double to, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::lround((to - from) / step));
  for (int k = 0; k <= n; ++k) out.push_back(two_pi_mhz(from + k * step));
  return out;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig3a", "fig3b", "fig4b", "fig4c", "figS3",
                                              "figS4", "figS5", "single_atom_baseline"};
  return names;
}

class UnknownPreset : public ConfigError {
public:
  explicit UnknownPreset(const std::string& name) : ConfigError("unknown preset '" + name + "'") {}
};

inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "fig3a" || name == "figS5") {
    c.kind = Kind::PhiRate;
    c.axis = Axis::Phi;
    c.grid = phase_grid(50);
    c.include_single_atom_column = name == "figS5";
  } else if (name == "fig3b") {
    c.kind = Kind::PhiG2;
    c.axis = Axis::Phi;
    c.grid = phase_grid(50);
  } else if (name == "fig4b" || name == "fig4c") {
    c.kind = Kind::TauG2;
    c.axis = Axis::Tau;
    c.system.phi = name == "fig4b" ? std::numbers::pi : 0.0;
    c.grid = linspace(0.0, 400e-9, 401);
  } else if (name == "figS3") {
    c.kind = Kind::ThermalSpectrum;
    c.axis = Axis::Detuning;
    c.system = reference_params(1);
    c.system.omega_drive = two_pi_mhz(0.2);
    c.grid = detuning_grid_mhz(-20.0, 20.0, 0.2);
    for (double t : {0.0, 1.0, 2.5, 5.0, 7.5}) c.thermal_taus.push_back(two_pi_mhz(t));
    c.pumping_enabled = false;
  } else if (name == "figS4") {
    c.kind = Kind::DetuningRate;
    c.axis = Axis::Detuning;
    c.system.omega_drive = two_pi_mhz(0.3);
    c.system.n_max = 4;
    c.grid = detuning_grid_mhz(-20.0, 20.0, 0.25);
  } else if (name == "single_atom_baseline") {
    c.kind = Kind::Baseline;
    c.axis = Axis::None;
    c.system = reference_params(1);
  } else {
    throw UnknownPreset(name);
  }
  return c;
}

// ---------------------------------------------------------------------------------------------
// Point evaluation.

inline SystemParams single_atom_companion(const SystemParams& p) {
  SystemParams s = p;
  s.delta_a = {p.delta_a.front()};
  s.phi = 0.0;
  return s;
}

/// Rate and unnormalised equal-time correlation R^2 g2(0), both in detected-rate units.
struct Moments {
  double rate = 0.0;
  double g2_unnormalized = 0.0;
};

inline Moments moments_of(const DensityMatrix& rho, RateConstant rc, bool with_g2) {
  Moments m;
  const double n = mean_photon_number(rho);
  m.rate = rc.per_second * n;
  if (with_g2) {
    const auto a = annihilation(rho.layout());
    const auto ad = a.adjoint();
    m.g2_unnormalized = rc.per_second * rc.per_second * expectation(ad * ad * a * a, rho).real();
  }
  return m;
}

inline Moments ideal_moments(const SystemParams& p, RateConstant rc, bool with_g2 = false) {
  return moments_of(steady_state(build_model(p)), rc, with_g2);
}

/// Thermal average over the detuning of every atom. Each atom's trap-bottom detuning is its
/// configured Delta_a minus `offset`; shifts tau * u follow the thermal quadrature.
inline Moments thermal_moments(const SystemParams& p, const ThermalParams& thermal, double offset,
                               ThermalMode mode, int pair_order, RateConstant rc, bool with_g2 = false) {
  if (thermal.tau == 0.0) {
    SystemParams q = p;
    for (double& d : q.delta_a) d -= offset;
    return ideal_moments(q, rc, with_g2);
  }
  const bool independent = p.n_atoms() == 2 && mode == ThermalMode::Independent;
  const auto rule = thermal_quadrature(independent ? pair_order : thermal.quad_order);
  const auto n = rule.nodes.size();
  Moments acc;
  auto add = [&](double w, double u1, double u2) {
    SystemParams q = p;
    q.delta_a[0] = p.delta_a[0] - offset + thermal.tau * u1;
    if (q.n_atoms() == 2) q.delta_a[1] = p.delta_a[1] - offset + thermal.tau * u2;
    const Moments m = ideal_moments(q, rc, with_g2);
    acc.rate += w * m.rate;
    acc.g2_unnormalized += w * m.g2_unnormalized;
  };
  if (!independent) {
    for (std::size_t i = 0; i < n; ++i) add(rule.weights[i], rule.nodes[i], rule.nodes[i]);
    return acc;
  }
  // R(d1, d2) = R(d2, d1) holds only when both atoms share the base detuning.
  const bool symmetric = p.delta_a[0] == p.delta_a[1];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = symmetric ? i : 0; j < n; ++j)
      add(rule.weights[i] * rule.weights[j] * (symmetric && i != j ? 2.0 : 1.0), rule.nodes[i],
          rule.nodes[j]);
  return acc;
}

struct Row {
  std::vector<double> values;
  std::string error;
};

struct Dataset {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<Row> rows;

  std::size_t failed_points() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.error.empty() ? 0 : 1;
    return n;
  }
};

/// Evaluates fn(i) for i in [0, n) on up to `threads` workers. fn must not throw.
template <class F>
void parallel_for(std::size_t n, int threads, F&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(workers, n); ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
}

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void add_metadata(Dataset& ds, const ExperimentConfig& c) {
  auto put = [&](std::string k, std::string v) { ds.metadata.emplace_back(std::move(k), std::move(v)); };
  auto freq = [&](const std::string& k, double w) {
    put(k + "_rad_s", fmt(w));
    put(k + "_mhz", fmt(to_mhz(w)));
  };
  put("code_version", kCodeVersion);
  put("experiment", c.name);
  put("kind", to_string(c.kind));
  put("scan.axis", to_string(c.axis));
  put("scan.points", std::to_string(c.n_points()));
  put("system.n_atoms", std::to_string(c.system.n_atoms()));
  put("system.n_max", std::to_string(c.system.n_max));
  freq("system.g", c.system.g);
  freq("system.kappa", c.system.kappa);
  freq("system.kappa_oc", c.system.kappa_oc);
  freq("system.gamma", c.system.gamma);
  freq("system.omega_drive", c.system.omega_drive);
  freq("system.delta_c", c.system.delta_c);
  for (int k = 0; k < c.system.n_atoms(); ++k) freq("system.delta_a" + std::to_string(k + 1), c.system.delta_a[k]);
  put("system.phi_rad", fmt(c.system.phi));
  put("detuning_convention", "delta = omega_laser - omega_transition");
  put("rate.constant", c.rate_constant == RateConstantChoice::Nominal ? "nominal" : "output_coupler");
  put("rate.constant_per_s", fmt(c.rate().per_second));
  put("ideal_only", c.ideal_only ? "true" : "false");
  // Delay correlations pool the pumping mixture only; thermal averaging is not applied there.
  const bool thermal_used = c.kind == Kind::ThermalSpectrum || (c.thermal_active() && c.kind != Kind::TauG2);
  put("thermal.enabled", thermal_used ? "true" : "false");
  if (c.kind == Kind::ThermalSpectrum) {
    std::string taus;
    for (double t : c.thermal_taus) taus += (taus.empty() ? "" : ",") + fmt(to_mhz(t));
    put("thermal.taus_mhz", taus);
    put("thermal.offset", "equal to tau (trap-bottom atom blue of the cavity by tau)");
    put("thermal.quad_order", std::to_string(c.thermal.quad_order));
  } else if (thermal_used) {
    freq("thermal.tau", c.thermal.tau);
    freq("thermal.offset", c.thermal_offset);
    put("thermal.mode", to_string(c.thermal_mode));
    put("thermal.quad_order", std::to_string(c.thermal.quad_order));
    put("thermal.pair_order", std::to_string(c.pair_quad_order));
  }
  put("pumping.enabled", c.pumping_active() ? "true" : "false");
  const bool mixes_g2 = (c.kind == Kind::PhiG2 && (c.thermal_active() || c.pumping_active())) ||
                        (c.kind == Kind::TauG2 && c.pumping_active());
  if (mixes_g2) put("g2_mixture_model", "extension: pooled incoherent mixture");
  if (c.pumping_active()) put("pumping.eta", fmt(c.pumping.eta));
  put("run.seed", std::to_string(c.seed));
}

}  // namespace detail

/// Runs every scan point; failing points keep their axis values and carry the error message.
inline Dataset run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  Dataset ds;
  detail::add_metadata(ds, cfg);
  const RateConstant rc = cfg.rate();
  const std::size_t n = cfg.n_points();
  ds.rows.resize(n);

  std::vector<std::string> axis_cols;
  switch (cfg.axis) {
    case Axis::Phi: axis_cols = {"phi_rad"}; break;
    case Axis::Sites: axis_cols = {"dnx", "dny", "phi_rad"}; break;
    case Axis::Detuning: axis_cols = {"detuning_mhz"}; break;
    case Axis::Tau: axis_cols = {"tau_s"}; break;
    case Axis::None: break;
  }
  auto axis_values = [&](std::size_t i) -> std::vector<double> {
    switch (cfg.axis) {
      case Axis::Phi: return {cfg.grid[i]};
      case Axis::Sites: {
        const auto s = cfg.sites[i];
        return {static_cast<double>(s.dnx), static_cast<double>(s.dny), lattice::phase_from_sites(s)};
      }
      case Axis::Detuning: return {to_mhz(cfg.grid[i])};
      case Axis::Tau: return {cfg.grid[i]};
      case Axis::None: return {};
    }
    return {};
  };
  auto phi_at = [&](std::size_t i) {
    return cfg.axis == Axis::Sites ? lattice::phase_from_sites(cfg.sites[i]) : cfg.grid[i];
  };

  std::vector<std::string> value_cols;
  std::function<std::vector<double>(std::size_t)> eval;

  const bool thermal = cfg.thermal_active();
  const bool pumping = cfg.pumping_active();
  const double eta = cfg.pumping.eta;
  ThermalParams th = cfg.thermal;
  if (!thermal) th.tau = 0.0;
  const double offset = thermal ? cfg.thermal_offset : 0.0;

  switch (cfg.kind) {
    case Kind::PhiRate: {
      value_cols = {"rate_ideal_hz"};
      if (thermal) value_cols.push_back("rate_thermal_hz");
      if (pumping) value_cols.push_back(thermal ? "rate_thermal_pumping_hz" : "rate_pumping_hz");
      if (cfg.include_single_atom_column) value_cols.push_back("rate_single_atom_hz");
      Moments single{};
      if (pumping || cfg.include_single_atom_column)
        single = thermal_moments(single_atom_companion(cfg.system), th, offset, cfg.thermal_mode,
                                 cfg.pair_quad_order, rc);
      eval = [&, single](std::size_t i) {
        SystemParams p = cfg.system;
        p.phi = phi_at(i);
        std::vector<double> v{ideal_moments(p, rc).rate};
        Moments two{};
        if (thermal || pumping)
          two = thermal ? thermal_moments(p, th, offset, cfg.thermal_mode, cfg.pair_quad_order, rc)
                        : Moments{v[0], 0.0};
        if (thermal) v.push_back(two.rate);
        if (pumping) v.push_back(mixture_rate(two.rate, single.rate, cfg.pumping));
        if (cfg.include_single_atom_column) v.push_back((pumping ? eta : 1.0) * single.rate);
        return v;
      };
      break;
    }
    case Kind::PhiG2: {
      value_cols = {"g2_zero_ideal"};
      const bool imperfect = thermal || pumping;
      if (imperfect) value_cols.push_back("g2_zero_imperfect_mixture");
      Moments single{};
      if (pumping)
        single = thermal_moments(single_atom_companion(cfg.system), th, offset, cfg.thermal_mode,
                                 cfg.pair_quad_order, rc, true);
      eval = [&, single, imperfect](std::size_t i) {
        SystemParams p = cfg.system;
        p.phi = phi_at(i);
        std::vector<double> v{g2_zero(steady_state(build_model(p)))};
        if (imperfect) {
          const Moments two = thermal_moments(p, th, offset, cfg.thermal_mode, cfg.pair_quad_order, rc, true);
          const double p2 = pumping ? eta * eta : 1.0;
          const double p1 = pumping ? 2.0 * eta * (1.0 - eta) : 0.0;
          const double r = p2 * two.rate + p1 * single.rate;
          if (!(r > 0.0)) throw ZeroMixedRate();
          v.push_back((p2 * two.g2_unnormalized + p1 * single.g2_unnormalized) / (r * r));
        }
        return v;
      };
      break;
    }
    case Kind::TauG2: {
      // One propagation over the whole grid; parallelism does not apply.
      value_cols = {"g2_ideal"};
      if (pumping) value_cols.push_back("g2_pumping_mixture");
      try {
        const auto model2 = build_model(cfg.system);
        const auto rho2 = steady_state(model2);
        const auto u2 = second_order_correlation(model2, rho2, cfg.grid);
        std::vector<double> mix;
        if (pumping) {
          const auto p1 = single_atom_companion(cfg.system);
          const auto model1 = build_model(p1);
          const auto u1 = second_order_correlation(model1, steady_state(model1), cfg.grid);
          std::vector<CorrelationComponent> comps{make_component(eta * eta, u2, rc),
                                                  make_component(2.0 * eta * (1.0 - eta), u1, rc)};
          mix = mixture_g2(comps, cfg.grid).values;
        }
        for (std::size_t i = 0; i < n; ++i) {
          ds.rows[i].values = {cfg.grid[i], u2.g2_unnormalized[i] / (u2.mean_photons * u2.mean_photons)};
          if (pumping) ds.rows[i].values.push_back(mix[i]);
        }
      } catch (const std::exception& e) {
        for (std::size_t i = 0; i < n; ++i) ds.rows[i] = {{cfg.grid[i]}, e.what()};
      }
      break;
    }
    case Kind::DetuningRate: {
      value_cols = {"rate_single_ideal_hz", "rate_two_ideal_hz"};
      if (thermal || pumping) {
        value_cols.push_back("rate_single_imperfect_hz");
        value_cols.push_back("rate_two_imperfect_hz");
      }
      eval = [&](std::size_t i) {
        SystemParams p = cfg.system;
        p.delta_c += cfg.grid[i];
        for (double& d : p.delta_a) d += cfg.grid[i];
        const auto p1 = single_atom_companion(p);
        std::vector<double> v{ideal_moments(p1, rc).rate, ideal_moments(p, rc).rate};
        if (thermal || pumping) {
          const Moments one = thermal_moments(p1, th, offset, cfg.thermal_mode, cfg.pair_quad_order, rc);
          const Moments two = thermal_moments(p, th, offset, cfg.thermal_mode, cfg.pair_quad_order, rc);
          v.push_back((pumping ? eta : 1.0) * one.rate);
          v.push_back(pumping ? mixture_rate(two.rate, one.rate, cfg.pumping) : two.rate);
        }
        return v;
      };
      break;
    }
    case Kind::ThermalSpectrum: {
      for (double t : cfg.thermal_taus) value_cols.push_back("rate_tau_" + detail::fmt(to_mhz(t)) + "mhz_hz");
      eval = [&](std::size_t i) {
        std::vector<double> v;
        const std::vector<double> one{cfg.grid[i]};
        for (double t : cfg.thermal_taus) {
          SystemParams p = cfg.system;
          ThermalParams tp = cfg.thermal;
          tp.tau = t;
          v.push_back(spectrum_with_temperature(p, tp, one, rc).front());
        }
        return v;
      };
      break;
    }
    case Kind::Baseline: {
      value_cols = {"rate_single_ideal_hz"};
      if (thermal) value_cols.push_back("rate_single_thermal_hz");
      if (pumping) value_cols.push_back(thermal ? "rate_single_thermal_pumping_hz" : "rate_single_pumping_hz");
      eval = [&](std::size_t) {
        std::vector<double> v{ideal_moments(cfg.system, rc).rate};
        const Moments m = thermal_moments(cfg.system, th, offset, cfg.thermal_mode, cfg.pair_quad_order, rc);
        if (thermal) v.push_back(m.rate);
        if (pumping) v.push_back(eta * m.rate);
        return v;
      };
      break;
    }
  }

  ds.columns = axis_cols;
  ds.columns.insert(ds.columns.end(), value_cols.begin(), value_cols.end());

  if (eval) {
    parallel_for(n, cfg.threads, [&](std::size_t i) {
      Row& row = ds.rows[i];
      row.values = axis_values(i);
      try {
        const auto v = eval(i);
        row.values.insert(row.values.end(), v.begin(), v.end());
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    });
  }
  return ds;
}

/// `#`-prefixed metadata, a header row, then data rows; `\n` line endings.
inline void write_csv(std::ostream& out, const Dataset& ds) {
  for (const auto& [k, v] : ds.metadata) out << "# " << k << " = " << v << '\n';
  for (const auto& c : ds.columns) out << c << ',';
  out << "error\n";
  for (const auto& row : ds.rows) {
    for (std::size_t k = 0; k < ds.columns.size(); ++k) {
      if (k < row.values.size()) out << detail::fmt(row.values[k]);
      out << ',';
    }
    std::string err = row.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    out << err << '\n';
  }
}

// ---------------------------------------------------------------------------------------------

/// A few representative ideal models of an experiment (used for cross-validation).
inline std::vector<LindbladModel> representative_models(const ExperimentConfig& cfg, int n_max) {
  std::vector<LindbladModel> out;
  SystemParams p = cfg.system;
  p.n_max = n_max;
  switch (cfg.kind) {
    case Kind::PhiRate:
    case Kind::PhiG2:
      for (double phi : {0.0, std::numbers::pi / 2, std::numbers::pi}) {
        p.phi = phi;
        out.push_back(build_model(p));
      }
      break;
    case Kind::TauG2: out.push_back(build_model(p)); break;
    case Kind::DetuningRate:
      for (double d : {-7.6, 0.0, 7.6}) {
        SystemParams q = p;
        q.delta_c += two_pi_mhz(d);
        for (double& x : q.delta_a) x += two_pi_mhz(d);
        out.push_back(build_model(q));
        out.push_back(build_model(single_atom_companion(q)));
      }
      break;
    case Kind::ThermalSpectrum:
      for (double d : {-7.0, 0.0, 7.0}) {
        SystemParams q = p;
        q.delta_c = two_pi_mhz(d);
        q.delta_a = {two_pi_mhz(d - 2.5)};
        out.push_back(build_model(q));
      }
      break;
    case Kind::Baseline: out.push_back(build_model(p)); break;
  }
  return out;
}

}  // namespace cqed::experiment
