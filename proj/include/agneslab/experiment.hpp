#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "agneslab/analysis.hpp"
#include "agneslab/noise.hpp"
#include "agneslab/objectives.hpp"
#include "agneslab/optim.hpp"
#include "agneslab/params.hpp"
#include "agneslab/types.hpp"

namespace agneslab::experiment {

/// Outputs a config may request. The bound column joins the ensemble CSV;
/// Lyapunov values go to a separate CSV; checks and the slope go to a text
/// report. Check identifiers are validated at parse time.
struct OutputRequests {
  bool ensemble_csv = true;
  std::optional<std::string> bound_theorem;
  std::optional<std::string> lyapunov_kind;
  std::optional<double> slope_tail_fraction;

  bool wants_report() const {
    return bound_theorem || lyapunov_kind || slope_tail_fraction;
  }
};

/// A fully resolved experiment: objective, noise, optimizer (explicit or
/// theorem-derived), initial point, and requested outputs.
struct ExperimentConfig {
  ExperimentConfig(objectives::Objective obj, noise::NoiseModel noise_model,
                   optim::OptimizerConfig optimizer)
      : objective(std::move(obj)),
        noise_model(std::move(noise_model)),
        optimizer(optimizer) {}

  std::string name = "experiment";
  objectives::Objective objective;
  noise::NoiseModel noise_model;
  optim::OptimizerConfig optimizer;
  std::string derive;  // empty when hyperparameters were given explicitly
  Vec x0;
  long iters = 0;
  int runs = 0;
  std::uint64_t master_seed = 0;
  OutputRequests outputs;
};

/// Parses and validates a config document. Unknown keys are fatal; exactly
/// one of explicit hyperparameters or `derive` must be present. Throws
/// ConfigError with the offending key or the violated inequality.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

/// Analytic problem class the derivations see: objective constants plus the
/// effective noise intensity.
params::ProblemClass problem_class_of(const objectives::Objective& obj,
                                      const noise::NoiseModel& noise_model);

struct ExperimentOutcome {
  int exit_code = 0;  // 0 ok, 2 when a requested check failed
  std::vector<std::string> report_lines;
  std::vector<std::string> written_files;
};

/// Runs one experiment and writes the requested outputs under out_dir.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::string& out_dir, int threads = 0);

std::vector<std::string> preset_names();

/// Runs a named preset; returns the worst exit code over its experiments.
int run_preset(const std::string& name, const std::string& out_dir,
               std::optional<std::uint64_t> seed_override, int threads = 0);

/// Serializes one float with 17 significant digits (CSV round-trip exact).
std::string format_float(double value);

}  // namespace agneslab::experiment
