#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ifs/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Shadowing experiments for iterated function systems"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, sweep_dir;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t grid_n = 0;
  long long horizon = 0;
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  auto* out_opt = app.add_option("--out", out_dir, "directory for reports and traces");
  auto* grid_opt = app.add_option("--grid", grid_n, "override the oracle grid size");
  auto* horizon_opt = app.add_option("--horizon", horizon, "override the iteration horizon");

  auto* run_cmd = app.add_subcommand("run", "run one experiment config");
  run_cmd->add_option("config", config_path, "JSON config file")->required();
  auto* sweep_cmd = app.add_subcommand("sweep", "run every *.json config in a directory");
  sweep_cmd->add_option("dir", sweep_dir, "directory of JSON configs")->required();
  auto* schema_cmd = app.add_subcommand("schema", "print the config schema and exit codes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return static_cast<int>(ifs::ExitStatus::BadConfig);
  }

  ifs::RunOptions options;
  if (seed_opt->count() > 0) options.seed_override = seed;
  if (out_opt->count() > 0) options.out_dir = out_dir;
  if (grid_opt->count() > 0) options.grid_override = grid_n;
  if (horizon_opt->count() > 0) options.horizon_override = horizon;

  if (schema_cmd->parsed()) {
    std::cout << ifs::config_schema_text();
    return 0;
  }
  if (run_cmd->parsed()) {
    const ifs::RunOutcome outcome = ifs::run_experiment_file(config_path, options);
    if (!outcome.message.empty()) std::cerr << "error: " << outcome.message << "\n";
    if (!outcome.report.is_null()) std::cout << outcome.report.dump(2) << "\n";
    return static_cast<int>(outcome.status);
  }
  const ifs::SweepOutcome outcome = ifs::run_sweep(sweep_dir, options);
  if (!outcome.message.empty()) std::cerr << "error: " << outcome.message << "\n";
  if (!outcome.aggregate.is_null()) std::cout << outcome.aggregate.dump(2) << "\n";
  return static_cast<int>(outcome.status);
}
