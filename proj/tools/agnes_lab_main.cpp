#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "agneslab/errors.hpp"
#include "agneslab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "agnes-lab: stochastic first-order optimization experiments with "
      "theorem-derived parameters, bound checks, and Lyapunov verification"};

  std::string config_path;
  std::string preset;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 0;

  auto* config_opt = app.add_option("--config", config_path,
                                    "Path to an experiment config (JSON)");
  auto* preset_opt = app.add_option("--preset", preset, "Named preset to run");
  app.add_option("--out-dir", out_dir, "Directory for output files");
  app.add_option("--seed", seed, "Master seed override");
  app.add_option("--threads", threads,
                 "Worker threads (0 = hardware); never changes results");
  config_opt->excludes(preset_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      agneslab::experiment::ExperimentConfig config =
          agneslab::experiment::load_config_file(config_path);
      if (seed) config.master_seed = *seed;
      const auto outcome =
          agneslab::experiment::run_experiment(config, out_dir, threads);
      for (const auto& line : outcome.report_lines) std::cout << line << "\n";
      return outcome.exit_code;
    }
    if (!preset.empty()) {
      return agneslab::experiment::run_preset(preset, out_dir, seed, threads);
    }
  } catch (const agneslab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "one of --config or --preset is required\n";
  return 1;
}
