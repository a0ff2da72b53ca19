// simulate <preset> | --config <path> [--out <path>] [--n-max K] [--ideal] [--threads N] [--seed S]

#include "cqed/config.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace ex = cqed::experiment;

namespace {
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady-state and correlation scans for atoms in a driven optical cavity"};
  std::string preset_name, config_path, out_path;
  std::optional<int> n_max, threads;
  std::optional<std::uint64_t> seed;
  bool ideal = false, list = false;

  app.add_option("preset", preset_name, "Preset experiment name");
  app.add_option("--config", config_path, "Key = value experiment file");
  app.add_option("--out", out_path, "CSV output path (default: stdout)");
  app.add_option("--n-max", n_max, "Photon-number truncation");
  app.add_flag("--ideal", ideal, "Drop thermal and pumping imperfections");
  app.add_option("--threads", threads, "Concurrent scan points");
  app.add_option("--seed", seed, "Seed recorded in the metadata");
  app.add_flag("--list", list, "List presets and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (list) {
    for (const auto& name : ex::preset_names()) std::cout << name << '\n';
    return 0;
  }

  ex::ExperimentConfig cfg;
  try {
    if (preset_name.empty() == config_path.empty())
      throw ex::ConfigError("give exactly one of <preset> or --config");
    cfg = config_path.empty() ? ex::preset(preset_name) : ex::load_config(config_path);
    if (n_max) cfg.system.n_max = *n_max;
    if (ideal) cfg.ideal_only = true;
    if (threads) cfg.threads = *threads;
    if (seed) cfg.seed = *seed;
    if (!out_path.empty()) cfg.output_path = out_path;
    cfg.validate();
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  ex::Dataset ds;
  try {
    ds = ex::run_experiment(cfg);
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  }

  if (cfg.output_path.empty()) {
    ex::write_csv(std::cout, ds);
  } else {
    std::ofstream out(cfg.output_path, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << cfg.output_path << '\n';
      return kExitConfig;
    }
    ex::write_csv(out, ds);
  }

  const auto failed = ds.failed_points();
  if (failed > 0) std::cerr << failed << " of " << ds.rows.size() << " points failed\n";
  return 10 * failed > ds.rows.size() ? kExitSolver : 0;
}
