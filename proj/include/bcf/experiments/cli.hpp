#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bcf/csv.hpp"
#include "bcf/experiments/config.hpp"
#include "bcf/experiments/results.hpp"
#include "bcf/experiments/runner.hpp"

namespace bcf::experiments {

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<int> workers;
};

inline ExperimentConfig resolve_config(const std::string &experiment, const CliOverrides &o) {
  ExperimentConfig config;
  config.experiment = experiment;
  if (!o.config_path.empty()) config = load_config(o.config_path, config);
  if (config.experiment != experiment) {
    throw config_error("config file declares experiment '" + config.experiment + "' but '" + experiment +
                       "' was requested");
  }
  if (o.seed) config.seed = *o.seed;
  if (o.reps) config.repetitions = *o.reps;
  if (o.out) config.output = *o.out;
  if (o.format) config.format = *o.format;
  if (o.workers) config.workers = *o.workers;
  validate(config);
  return config;
}

inline void write_metadata(const ExperimentConfig &config, const RunReport &report) {
  const nlohmann::json meta = {{"experiment", config.experiment},
                               {"seed", config.seed},
                               {"repetitions", config.repetitions},
                               {"excluded_repetitions", report.excluded_repetitions},
                               {"rows", report.rows.size()}};
  const std::string path = config.output + ".meta.json";
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << meta.dump(2) << '\n';
}

inline int run_experiment_command(const std::string &experiment, const CliOverrides &overrides) {
  const ExperimentConfig config = resolve_config(experiment, overrides);
  const RunReport report = run_experiment(config);
  for (const auto &w : report.warnings) std::cerr << "warning: " << w << '\n';
  emit_results(report.rows, config.output, config.format);
  write_metadata(config, report);
  std::cerr << experiment << ": wrote " << report.rows.size() << " rows to " << config.output;
  if (report.excluded_repetitions > 0) std::cerr << " (" << report.excluded_repetitions << " repetitions excluded)";
  std::cerr << '\n';
  return 0;
}

/// Draws one dataset from an experiment-1 style SIMDG and writes it as CSV.
inline int run_simulate_command(const CliOverrides &overrides, double k, Index n) {
  ExperimentConfig config = resolve_config("exp1", overrides);
  Rng rng(derive_seed(config.seed, 0));
  const SimdgSpec spec = sample_experiment1_spec(config, rng);
  const Dataset data = generate(spec, k, n, rng);
  write_dataset_csv(config.output, data);
  std::cerr << "simulate: wrote " << n << " rows to " << config.output << '\n';
  return 0;
}

/// Entry point of the `bcf` command-line tool.
inline int run_cli(int argc, const char *const *argv) {
  CLI::App app{"Boosted control function estimation and experiments"};
  app.require_subcommand(1);

  CliOverrides overrides;
  double sim_k = 1.0;
  Index sim_n = 1000;
  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", overrides.config_path, "JSON configuration file");
    sub->add_option("--seed", overrides.seed, "master seed");
    sub->add_option("--reps", overrides.reps, "number of repetitions");
    sub->add_option("--out", overrides.out, "output path");
    sub->add_option("--format", overrides.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--workers", overrides.workers, "parallel repetitions")->check(CLI::PositiveNumber);
  };
  auto *exp1 = app.add_subcommand("exp1", "shifted-test MSE of BCF against baselines on random SIMDGs");
  auto *exp2 = app.add_subcommand("exp2", "subspace recovery of the reduced-rank estimator");
  auto *tabular = app.add_subcommand("tabular", "region-split evaluation on a CSV dataset");
  auto *simulate = app.add_subcommand("simulate", "write one simulated dataset as CSV");
  for (auto *sub : {exp1, exp2, tabular, simulate}) add_common(sub);
  simulate->add_option("--k", sim_k, "shift strength")->check(CLI::PositiveNumber);
  simulate->add_option("--n", sim_n, "number of rows")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }

  try {
    if (*simulate) return run_simulate_command(overrides, sim_k, sim_n);
    for (auto *sub : {exp1, exp2, tabular}) {
      if (*sub) return run_experiment_command(sub->get_name(), overrides);
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace bcf::experiments
