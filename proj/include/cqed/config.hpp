#pragma once

// Flat `section.key = value` configuration files for experiments.
//
//   preset = fig3a            # optional; later keys override the preset
//   units.angular = false     # false: frequencies in MHz (x 2pi applied); true: 10^6 rad/s
//   system.g = 7.6
//   scan.axis = phi
//   scan.start = 0
//   scan.stop = 6.283185307179586
//   scan.points = 50
//
// `#` starts a comment. Keys are case-sensitive; every line is either blank, a comment or a
// single assignment.

#include "cqed/experiments.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace cqed::experiment {

class ConfigParseError : public ConfigError {
public:
  ConfigParseError(int line, std::string field, const std::string& what)
      : ConfigError("line " + std::to_string(line) + (field.empty() ? "" : ", field '" + field + "'") +
                    ": " + what),
        line_(line),
        field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

private:
  int line_;
  std::string field_;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

}  // namespace detail

inline std::vector<ConfigEntry> tokenize_config(std::istream& in) {
  std::vector<ConfigEntry> out;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string s = detail::trim(raw);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigParseError(line, "", "expected 'key = value'");
    ConfigEntry e{detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigParseError(line, "", "missing key");
    if (e.value.empty()) throw ConfigParseError(line, e.key, "missing value");
    for (const auto& prev : out)
      if (prev.key == e.key)
        throw ConfigParseError(line, e.key, "duplicate key (first set on line " + std::to_string(prev.line) + ")");
    out.push_back(std::move(e));
  }
  return out;
}

namespace detail {

class EntryReader {
public:
  explicit EntryReader(const ConfigEntry& e) : e_(e) {}

  [[noreturn]] void fail(const std::string& what) const { throw ConfigParseError(e_.line, e_.key, what); }

  double number(const std::string& text) const {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) fail("'" + text + "' is not a number");
    return v;
  }
  double number() const { return number(e_.value); }

  long integer() const {
    long v = 0;
    const auto* end = e_.value.data() + e_.value.size();
    const auto [ptr, ec] = std::from_chars(e_.value.data(), end, v);
    if (ec != std::errc{} || ptr != end) fail("'" + e_.value + "' is not an integer");
    return v;
  }

  bool boolean() const {
    if (e_.value == "true" || e_.value == "1" || e_.value == "yes") return true;
    if (e_.value == "false" || e_.value == "0" || e_.value == "no") return false;
    fail("expected true or false");
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& t : split(e_.value, ',')) out.push_back(number(t));
    return out;
  }

  std::vector<lattice::SiteDifference> sites() const {
    std::vector<lattice::SiteDifference> out;
    for (const auto& t : split(e_.value, ',')) {
      const auto parts = split(t, ':');
      if (parts.size() != 2) fail("site difference '" + t + "' must be dnx:dny");
      const double x = number(parts[0]), y = number(parts[1]);
      if (x != std::floor(x) || y != std::floor(y)) fail("site differences are integers");
      out.push_back({static_cast<int>(x), static_cast<int>(y)});
    }
    return out;
  }

  const std::string& text() const { return e_.value; }

private:
  const ConfigEntry& e_;
};

}  // namespace detail

/// Builds a validated configuration from parsed entries.
inline ExperimentConfig build_config(const std::vector<ConfigEntry>& entries) {
  ExperimentConfig c;
  bool angular = false;
  for (const auto& e : entries) {
    if (e.key == "preset") c = preset(e.value);
    if (e.key == "units.angular") angular = detail::EntryReader(e).boolean();
  }
  auto freq = [&](double v) { return angular ? v * 1e6 : two_pi_mhz(v); };

  std::optional<double> start, stop;
  std::optional<long> points;
  std::optional<std::vector<double>> values;
  int start_line = 0;
  std::optional<int> n_atoms;
  std::optional<std::vector<double>> delta_a;

  for (const auto& e : entries) {
    const detail::EntryReader r(e);
    const auto& k = e.key;
    if (k == "preset" || k == "units.angular") continue;
    if (k == "name") c.name = e.value;
    else if (k == "kind") {
      bool found = false;
      for (Kind kind : {Kind::PhiRate, Kind::PhiG2, Kind::TauG2, Kind::DetuningRate, Kind::ThermalSpectrum,
                        Kind::Baseline})
        if (e.value == to_string(kind)) c.kind = kind, found = true;
      if (!found) r.fail("unknown experiment kind '" + e.value + "'");
    }
    else if (k == "system.n_atoms") n_atoms = r.integer();
    else if (k == "system.n_max") c.system.n_max = static_cast<int>(r.integer());
    else if (k == "system.g") c.system.g = freq(r.number());
    else if (k == "system.kappa") c.system.kappa = freq(r.number());
    else if (k == "system.kappa_oc") c.system.kappa_oc = freq(r.number());
    else if (k == "system.gamma") c.system.gamma = freq(r.number());
    else if (k == "system.omega") c.system.omega_drive = freq(r.number());
    else if (k == "system.delta_c") c.system.delta_c = freq(r.number());
    else if (k == "system.delta_a") {
      auto v = r.numbers();
      for (double& x : v) x = freq(x);
      delta_a = v;
    }
    else if (k == "system.phi") c.system.phi = r.number();
    else if (k == "thermal.enabled") c.thermal_enabled = r.boolean();
    else if (k == "thermal.tau") c.thermal.tau = freq(r.number());
    else if (k == "thermal.offset") c.thermal_offset = freq(r.number());
    else if (k == "thermal.quad_order") c.thermal.quad_order = static_cast<int>(r.integer());
    else if (k == "thermal.pair_order") c.pair_quad_order = static_cast<int>(r.integer());
    else if (k == "thermal.mode") {
      if (e.value == "common") c.thermal_mode = ThermalMode::Common;
      else if (e.value == "independent") c.thermal_mode = ThermalMode::Independent;
      else r.fail("expected common or independent");
    }
    else if (k == "pumping.enabled") c.pumping_enabled = r.boolean();
    else if (k == "pumping.eta") c.pumping.eta = r.number();
    else if (k == "rate.constant") {
      if (e.value == "nominal") c.rate_constant = RateConstantChoice::Nominal;
      else if (e.value == "output_coupler") c.rate_constant = RateConstantChoice::OutputCoupler;
      else r.fail("expected nominal or output_coupler");
    }
    else if (k == "scan.axis") {
      bool found = false;
      for (Axis a : {Axis::None, Axis::Phi, Axis::Sites, Axis::Detuning, Axis::Tau})
        if (e.value == to_string(a)) c.axis = a, found = true;
      if (!found) r.fail("unknown scan axis '" + e.value + "'");
    }
    else if (k == "scan.start") start = r.number(), start_line = e.line;
    else if (k == "scan.stop") stop = r.number();
    else if (k == "scan.points") points = r.integer();
    else if (k == "scan.values") values = r.numbers();
    else if (k == "scan.sites") c.sites = r.sites();
    else if (k == "scan.thermal_taus") {
      c.thermal_taus.clear();
      for (double t : r.numbers()) c.thermal_taus.push_back(freq(t));
    }
    else if (k == "scan.single_atom_column") c.include_single_atom_column = r.boolean();
    else if (k == "output.path") c.output_path = e.value;
    else if (k == "run.threads") c.threads = static_cast<int>(r.integer());
    else if (k == "run.seed") c.seed = static_cast<std::uint64_t>(r.integer());
    else if (k == "run.ideal") c.ideal_only = r.boolean();
    else r.fail("unknown key");
  }

  if (n_atoms) {
    if (*n_atoms < 1 || *n_atoms > 2) throw ConfigError("system.n_atoms must be 1 or 2");
    const double d = c.system.delta_a.empty() ? 0.0 : c.system.delta_a.front();
    c.system.delta_a.assign(static_cast<std::size_t>(*n_atoms), d);
  }
  if (delta_a) {
    if (delta_a->size() == 1) delta_a->assign(c.system.delta_a.size(), delta_a->front());
    if (delta_a->size() != c.system.delta_a.size())
      throw ConfigError("system.delta_a lists " + std::to_string(delta_a->size()) + " values for " +
                        std::to_string(c.system.delta_a.size()) + " atoms");
    c.system.delta_a = *delta_a;
  }

  // Scan values: detunings follow the frequency units, phases are radians, delays seconds.
  auto scale = [&](double v) { return c.axis == Axis::Detuning ? freq(v) : v; };
  if (values && (start || stop || points)) throw ConfigError("give either scan.values or scan.start/stop/points");
  if (values) {
    c.grid.clear();
    for (double v : *values) c.grid.push_back(scale(v));
  } else if (start || stop || points) {
    if (!(start && stop && points))
      throw ConfigParseError(start_line, "scan", "scan.start, scan.stop and scan.points go together");
    if (*points < 0) throw ConfigError("scan.points must be >= 0");
    c.grid.clear();
    for (double v : linspace(*start, *stop, static_cast<int>(*points))) c.grid.push_back(scale(v));
  }
  if (c.axis != Axis::Sites) c.sites.clear();
  c.validate();
  return c;
}

inline ExperimentConfig parse_config(std::istream& in) { return build_config(tokenize_config(in)); }

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

inline Dataset run_preset(const std::string& name) { return run_experiment(preset(name)); }

inline Dataset run_config(const std::filesystem::path& path) { return run_experiment(load_config(path)); }

}  // namespace cqed::experiment
