#include "agneslab/experiment.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "agneslab/errors.hpp"
#include "agneslab/overparam.hpp"
#include "json.hpp"

namespace agneslab::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Strict JSON access: every key must be consumed, unknown keys are fatal.

class StrictView {
 public:
  StrictView(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  const json& require(const char* key) {
    const json* p = optional(key);
    if (!p) throw ConfigError(path_ + ": missing key '" + key + "'");
    return *p;
  }

  const json* optional(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  bool has(const char* key) const { return j_.contains(key); }

  void done() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(path_ + ": unknown key '" + item.key() + "'");
      }
    }
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

long as_count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long>() <= 0) {
    throw ConfigError(path + ": expected a positive integer");
  }
  return j.get<long>();
}

std::uint64_t as_seed(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw ConfigError(path + ": expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path + ": expected a boolean");
  return j.get<bool>();
}

Vec as_vec(const json& j, const std::string& path) {
  if (j.is_number()) {
    Vec v(1);
    v[0] = j.get<double>();
    return v;
  }
  if (!j.is_array() || j.empty()) {
    throw ConfigError(path + ": expected a number or a non-empty array");
  }
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = as_double(j[i], path);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Section parsers.

objectives::Objective parse_objective(const json& j) {
  StrictView view(j, "objective");
  const std::string kind = as_string(view.require("kind"), "objective.kind");
  try {
    if (kind == "power_hinge") {
      const long d = as_count(view.require("d"), "objective.d");
      view.done();
      return objectives::Objective::power_hinge(static_cast<int>(d));
    }
    if (kind == "quadratic2d") {
      const double mu = as_double(view.require("mu"), "objective.mu");
      const double L = as_double(view.require("L"), "objective.L");
      view.done();
      return objectives::Objective::quadratic2d(mu, L);
    }
    if (kind == "quadratic_nd") {
      const json& eigs = view.require("eigenvalues");
      const Vec v = as_vec(eigs, "objective.eigenvalues");
      view.done();
      return objectives::Objective::quadratic_nd(
          std::vector<double>(v.data(), v.data() + v.size()));
    }
    if (kind == "softplus_mirror") {
      view.done();
      return objectives::Objective::softplus_mirror();
    }
    if (kind == "sine_valley") {
      view.done();
      return objectives::Objective::sine_valley();
    }
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("objective: ") + e.what());
  }
  throw ConfigError("objective.kind: unknown kind '" + kind + "'");
}

noise::NoiseModel parse_noise(const json& j, const std::string& path) {
  StrictView view(j, path);
  const std::string kind = as_string(view.require("kind"), path + ".kind");
  try {
    if (kind == "exact") {
      view.done();
      return noise::NoiseModel::exact();
    }
    if (kind == "batched") {
      const long n_b = as_count(view.require("batch_size"), path + ".batch_size");
      noise::NoiseModel inner = parse_noise(view.require("inner"), path + ".inner");
      view.done();
      return noise::NoiseModel::batched(std::move(inner), static_cast<int>(n_b));
    }
    const double sigma = as_double(view.require("sigma"), path + ".sigma");
    if (kind == "collinear") {
      view.done();
      return noise::NoiseModel::collinear(sigma);
    }
    if (kind == "isotropic") {
      view.done();
      return noise::NoiseModel::isotropic(sigma);
    }
    if (kind == "orthogonal") {
      view.done();
      return noise::NoiseModel::orthogonal(sigma);
    }
    if (kind == "fixed_direction" || kind == "bernoulli_direction") {
      const Vec dir = as_vec(view.require("direction"), path + ".direction");
      view.done();
      return kind == "fixed_direction"
                 ? noise::NoiseModel::fixed_direction(sigma, dir)
                 : noise::NoiseModel::bernoulli_direction(sigma, dir);
    }
  } catch (const ContractViolation& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + ".kind: unknown kind '" + kind + "'");
}

optim::MomentumSchedule parse_schedule(const json& j, const std::string& path) {
  StrictView view(j, path);
  const std::string kind = as_string(view.require("kind"), path + ".kind");
  try {
    if (kind == "constant") {
      const double rho = as_double(view.require("rho"), path + ".rho");
      view.done();
      return optim::MomentumSchedule::constant(rho);
    }
    if (kind == "polynomial") {
      const double n0 = as_double(view.require("n0"), path + ".n0");
      view.done();
      return optim::MomentumSchedule::polynomial(n0);
    }
  } catch (const ContractViolation& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + ".kind: unknown kind '" + kind + "'");
}

optim::OptimizerConfig derive_optimizer(const std::string& id,
                                        const params::ProblemClass& pc) {
  using optim::MomentumSchedule;
  using optim::OptimizerConfig;
  try {
    if (id == "agnes_convex") {
      const auto p = params::agnes_convex_params(pc);
      return OptimizerConfig::agnes(p.eta, p.alpha, p.schedule);
    }
    if (id == "agnes_strongly_convex") {
      const auto p = params::agnes_strongly_convex_params(pc);
      return OptimizerConfig::agnes(p.eta, p.alpha, MomentumSchedule::constant(p.rho));
    }
    if (id == "nag_convex") {
      const auto p = params::nag_convex_params(pc);
      return OptimizerConfig::nag(p.eta, p.schedule);
    }
    if (id == "nag_strongly_convex") {
      const auto p = params::nag_strongly_convex_params(pc);
      return OptimizerConfig::nag(p.eta, MomentumSchedule::constant(p.rho));
    }
    if (id == "gd_convex" || id == "gd_pl") {
      if (id == "gd_pl" && !pc.mu_pl) {
        throw ContractViolation("gd_pl derivation needs a PL constant");
      }
      return OptimizerConfig::sgd(params::sgd_params(pc).eta);
    }
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("optimizer.derive: ") + e.what());
  } catch (const AdmissibilityError& e) {
    throw ConfigError(std::string("optimizer.derive: ") + e.what());
  }
  throw ConfigError("optimizer.derive: unknown theorem id '" + id + "'");
}

optim::OptimizerConfig parse_optimizer(const json& j,
                                       const params::ProblemClass& pc,
                                       std::string& derive_out) {
  StrictView view(j, "optimizer");
  if (view.has("derive")) {
    derive_out = as_string(view.require("derive"), "optimizer.derive");
    view.done();  // derive excludes every explicit hyperparameter
    return derive_optimizer(derive_out, pc);
  }
  derive_out.clear();
  const std::string alg = as_string(view.require("algorithm"), "optimizer.algorithm");
  optim::OptimizerConfig cfg;
  try {
    const double eta = as_double(view.require("eta"), "optimizer.eta");
    if (alg == "sgd") {
      cfg = optim::OptimizerConfig::sgd(eta);
    } else if (alg == "nag") {
      cfg = optim::OptimizerConfig::nag(
          eta, parse_schedule(view.require("schedule"), "optimizer.schedule"));
    } else if (alg == "agnes") {
      const double alpha = as_double(view.require("alpha"), "optimizer.alpha");
      cfg = optim::OptimizerConfig::agnes(
          eta, alpha, parse_schedule(view.require("schedule"), "optimizer.schedule"));
    } else if (alg == "general_agnes") {
      const double g1 = as_double(view.require("gamma1"), "optimizer.gamma1");
      const double g2 = as_double(view.require("gamma2"), "optimizer.gamma2");
      cfg = optim::OptimizerConfig::general_agnes(
          eta, g1, g2, parse_schedule(view.require("schedule"), "optimizer.schedule"));
    } else {
      throw ConfigError("optimizer.algorithm: unknown algorithm '" + alg + "'");
    }
    if (const json* wd = view.optional("weight_decay")) {
      StrictView wv(*wd, "optimizer.weight_decay");
      const std::string mode = as_string(wv.require("mode"), "optimizer.weight_decay.mode");
      cfg.lambda = as_double(wv.require("lambda"), "optimizer.weight_decay.lambda");
      wv.done();
      if (mode == "dynamic") {
        cfg.weight_decay = optim::WeightDecayMode::dynamic;
      } else if (mode == "objective_penalty") {
        cfg.weight_decay = optim::WeightDecayMode::objective_penalty;
      } else {
        throw ConfigError("optimizer.weight_decay.mode: unknown mode '" + mode + "'");
      }
    }
    if (const json* f = view.optional("final_gradient_step")) {
      cfg.final_gradient_step = as_bool(*f, "optimizer.final_gradient_step");
    }
    cfg.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("optimizer: ") + e.what());
  }
  view.done();
  return cfg;
}

params::Theorem theorem_from_id(const std::string& id) {
  if (id == "nag_convex") return params::Theorem::nag_convex;
  if (id == "nag_strongly_convex") return params::Theorem::nag_strongly_convex;
  if (id == "agnes_convex") return params::Theorem::agnes_convex;
  if (id == "agnes_strongly_convex") return params::Theorem::agnes_strongly_convex;
  if (id == "gd_convex") return params::Theorem::gd_convex;
  if (id == "gd_pl") return params::Theorem::gd_pl;
  if (id == "non_convex") return params::Theorem::non_convex;
  throw ConfigError("outputs.bound: unknown theorem id '" + id + "'");
}

double constant_rho_or_throw(const optim::OptimizerConfig& cfg,
                             const std::string& what) {
  if (cfg.schedule.kind != optim::MomentumSchedule::Kind::constant) {
    throw ConfigError(what + ": needs a constant momentum schedule");
  }
  return cfg.schedule.rho;
}

std::vector<double> resolve_bound(const ExperimentConfig& config,
                                  params::Theorem theorem) {
  const auto c = config.objective.constants();
  const params::ProblemClass pc =
      problem_class_of(config.objective, config.noise_model);
  params::Anchors anchors;
  anchors.f_gap0 = config.objective.eval(config.x0) - c.inf_f;
  if (c.minimizer) anchors.dist_sq0 = (config.x0 - *c.minimizer).squaredNorm();
  anchors.v0_sq = 0.0;

  const bool needs_minimizer = theorem == params::Theorem::nag_convex ||
                               theorem == params::Theorem::agnes_convex ||
                               theorem == params::Theorem::gd_convex;
  if (needs_minimizer && !c.minimizer) {
    throw ConfigError("outputs.bound: this bound needs a minimizer, which the "
                      "objective does not provide");
  }
  std::optional<params::NonConvexParams> ncp;
  if (theorem == params::Theorem::non_convex) {
    params::NonConvexParams p;
    p.eta = config.optimizer.eta;
    p.alpha = config.optimizer.gamma1() * config.optimizer.gamma2();
    p.rho = constant_rho_or_throw(config.optimizer, "outputs.bound non_convex");
    ncp = p;
  }
  try {
    return params::bound_curve(theorem, pc, anchors, config.iters, ncp);
  } catch (const AdmissibilityError& e) {
    throw ConfigError(std::string("outputs.bound: ") + e.what());
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("outputs.bound: ") + e.what());
  }
}

struct ResolvedLyapunov {
  analysis::LyapunovSpec spec;
  std::optional<double> contraction;
  std::string label;
};

ResolvedLyapunov resolve_lyapunov(const ExperimentConfig& config,
                                  const std::string& id) {
  using analysis::LyapunovSpec;
  using optim::Algorithm;
  const auto c = config.objective.constants();
  const optim::OptimizerConfig& opt = config.optimizer;
  const params::ProblemClass pc =
      problem_class_of(config.objective, config.noise_model);

  auto minimizer_or_throw = [&]() -> Vec {
    if (!c.minimizer) {
      throw ConfigError("outputs.lyapunov: kind '" + id +
                        "' needs a minimizer, which the objective does not provide");
    }
    return *c.minimizer;
  };
  auto momentum_or_throw = [&]() {
    if (opt.algorithm != Algorithm::agnes && opt.algorithm != Algorithm::nag) {
      throw ConfigError("outputs.lyapunov: kind '" + id +
                        "' applies to the agnes/nag family");
    }
  };

  try {
    if (id == "convex_agnes") {
      momentum_or_throw();
      if (opt.schedule.kind != optim::MomentumSchedule::Kind::polynomial) {
        throw ConfigError("outputs.lyapunov convex_agnes: needs the polynomial schedule");
      }
      return {LyapunovSpec::convex_agnes(opt.gamma1(), opt.eta, opt.schedule.n0,
                                         c.inf_f, minimizer_or_throw()),
              std::nullopt, id};
    }
    if (id == "convex_nag") {
      momentum_or_throw();
      if (opt.schedule.kind != optim::MomentumSchedule::Kind::polynomial ||
          opt.schedule.n0 != 0.0) {
        throw ConfigError(
            "outputs.lyapunov convex_nag: needs the polynomial schedule with n0 = 0");
      }
      return {LyapunovSpec::convex_nag(opt.eta, c.inf_f, minimizer_or_throw()),
              std::nullopt, id};
    }
    if (id == "convex_gd") {
      if (opt.algorithm != Algorithm::sgd) {
        throw ConfigError("outputs.lyapunov convex_gd: applies to sgd");
      }
      const double n0 = 1.0 + pc.sigma * pc.sigma;
      return {LyapunovSpec::convex_gd(opt.eta, n0, c.inf_f, minimizer_or_throw()),
              std::nullopt, id};
    }
    if (id == "strongly_convex") {
      momentum_or_throw();
      if (!c.mu) {
        throw ConfigError(
            "outputs.lyapunov strongly_convex: objective has no strong-convexity constant");
      }
      const double rho = constant_rho_or_throw(opt, "outputs.lyapunov strongly_convex");
      const double psi = params::agnes_sc_param_inverse(opt.eta, rho, opt.gamma1());
      const double contraction = 1.0 - std::sqrt(*c.mu) * psi;
      return {LyapunovSpec::strongly_convex(*c.mu, psi, c.inf_f, minimizer_or_throw()),
              contraction, id};
    }
    if (id == "non_convex") {
      const double rho = constant_rho_or_throw(opt, "outputs.lyapunov non_convex");
      const double alpha = opt.gamma1() * opt.gamma2();
      return {LyapunovSpec::non_convex(alpha, rho), std::nullopt, id};
    }
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("outputs.lyapunov: ") + e.what());
  } catch (const AdmissibilityError& e) {
    throw ConfigError(std::string("outputs.lyapunov: ") + e.what());
  }
  throw ConfigError("outputs.lyapunov: unknown kind '" + id + "'");
}

void validate_outputs(const ExperimentConfig& config) {
  if (config.outputs.bound_theorem) {
    const params::Theorem t = theorem_from_id(*config.outputs.bound_theorem);
    if (t != params::Theorem::non_convex &&
        config.optimizer.report != optim::ReportPoint::iterate) {
      throw ConfigError(
          "outputs.bound: the bound constrains the iterate; set report = \"iterate\"");
    }
    if (config.optimizer.final_gradient_step) {
      throw ConfigError("outputs.bound: not defined together with final_gradient_step");
    }
    resolve_bound(config, t);
  }
  if (config.outputs.lyapunov_kind) {
    if (config.optimizer.final_gradient_step) {
      throw ConfigError("outputs.lyapunov: not defined together with final_gradient_step");
    }
    resolve_lyapunov(config, *config.outputs.lyapunov_kind);
  }
  if (config.outputs.slope_tail_fraction) {
    const double t = *config.outputs.slope_tail_fraction;
    if (!(t > 0.0 && t <= 1.0)) {
      throw ConfigError("outputs.slope_tail_fraction: must be in (0, 1]");
    }
  }
}

// ---------------------------------------------------------------------------
// Output writers.

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string ensemble_csv_body(const analysis::EnsembleStats& stats,
                              const std::vector<double>* bound) {
  std::string body = "n,mean_f,sem_f,mean_grad_sq,diverged_fraction,bound\n";
  const std::size_t len = stats.mean_f.size();
  for (std::size_t n = 0; n < len; ++n) {
    body += std::to_string(n);
    body += ',';
    body += format_float(stats.mean_f[n]);
    body += ',';
    body += format_float(stats.sem_f[n]);
    body += ',';
    body += format_float(stats.mean_grad_sq[n]);
    body += ',';
    body += format_float(stats.diverged_fraction[n]);
    body += ',';
    if (bound && n < bound->size()) body += format_float((*bound)[n]);
    body += '\n';
  }
  return body;
}

std::string lyapunov_csv_body(const analysis::LyapunovSeries& series) {
  std::string body = "n,lyapunov,sem\n";
  for (std::size_t n = 0; n < series.values.size(); ++n) {
    body += std::to_string(n);
    body += ',';
    body += format_float(series.values[n]);
    body += ',';
    body += format_float(series.sems[n]);
    body += '\n';
  }
  return body;
}

}  // namespace

std::string format_float(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

params::ProblemClass problem_class_of(const objectives::Objective& obj,
                                      const noise::NoiseModel& noise_model) {
  const auto c = obj.constants();
  params::ProblemClass pc;
  pc.L = c.L;
  pc.mu = c.mu;
  pc.mu_pl = c.mu_pl;
  pc.sigma = std::sqrt(noise_model.effective_sigma_sq());
  return pc;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  StrictView view(j, "config");

  objectives::Objective objective = parse_objective(view.require("objective"));
  noise::NoiseModel noise_model = parse_noise(view.require("noise"), "noise");
  const params::ProblemClass pc = problem_class_of(objective, noise_model);

  std::string derive;
  optim::OptimizerConfig optimizer =
      parse_optimizer(view.require("optimizer"), pc, derive);

  ExperimentConfig config(std::move(objective), std::move(noise_model), optimizer);
  config.derive = derive;
  if (const json* name = view.optional("name")) {
    config.name = as_string(*name, "name");
    if (config.name.empty()) throw ConfigError("name: must not be empty");
  }
  config.x0 = as_vec(view.require("x0"), "x0");
  if (config.x0.size() != config.objective.dimension()) {
    throw ConfigError("x0: dimension does not match the objective");
  }
  config.iters = as_count(view.require("iters"), "iters");
  const long runs = as_count(view.require("runs"), "runs");
  if (runs < 2) throw ConfigError("runs: ensembles need at least 2 runs");
  config.runs = static_cast<int>(runs);
  config.master_seed = as_seed(view.require("master_seed"), "master_seed");

  if (const json* rep = view.optional("report")) {
    const std::string r = as_string(*rep, "report");
    if (r == "iterate") {
      config.optimizer.report = optim::ReportPoint::iterate;
    } else if (r == "query_point") {
      config.optimizer.report = optim::ReportPoint::query_point;
    } else {
      throw ConfigError("report: expected \"iterate\" or \"query_point\"");
    }
  }

  if (const json* outputs = view.optional("outputs")) {
    StrictView ov(*outputs, "outputs");
    if (const json* e = ov.optional("ensemble_csv")) {
      config.outputs.ensemble_csv = as_bool(*e, "outputs.ensemble_csv");
    }
    if (const json* b = ov.optional("bound")) {
      config.outputs.bound_theorem = as_string(*b, "outputs.bound");
    }
    if (const json* l = ov.optional("lyapunov")) {
      config.outputs.lyapunov_kind = as_string(*l, "outputs.lyapunov");
    }
    if (const json* s = ov.optional("slope_tail_fraction")) {
      config.outputs.slope_tail_fraction = as_double(*s, "outputs.slope_tail_fraction");
    }
    ov.done();
  }
  view.done();

  validate_outputs(config);
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::string& out_dir, int threads) {
  ExperimentOutcome outcome;
  fs::create_directories(out_dir);

  std::optional<analysis::LyapunovSpec> lyapunov;
  std::optional<double> contraction;
  if (config.outputs.lyapunov_kind) {
    ResolvedLyapunov resolved =
        resolve_lyapunov(config, *config.outputs.lyapunov_kind);
    lyapunov = resolved.spec;
    contraction = resolved.contraction;
  }
  std::optional<params::Theorem> bound_theorem;
  std::vector<double> bound;
  if (config.outputs.bound_theorem) {
    bound_theorem = theorem_from_id(*config.outputs.bound_theorem);
    bound = resolve_bound(config, *bound_theorem);
  }

  analysis::EnsembleOptions opts;
  opts.iters = config.iters;
  opts.runs = config.runs;
  opts.master_seed = config.master_seed;
  opts.threads = threads;
  const analysis::EnsembleResult result = analysis::run_ensemble(
      config.optimizer, config.objective, config.noise_model, config.x0, opts,
      lyapunov);

  bool failed = false;
  if (bound_theorem) {
    if (*bound_theorem == params::Theorem::non_convex) {
      const analysis::MinGrad mg = analysis::min_grad_report(result.stats);
      const double limit =
          bound[bound.size() - 1] +
          3.0 * result.stats.sem_grad_sq[static_cast<std::size_t>(mg.index)];
      const bool pass = mg.value <= limit;
      failed = failed || !pass;
      outcome.report_lines.push_back(
          "bound non_convex (running-min grad^2): " +
          std::string(pass ? "PASS" : "FAIL") + " (min " + format_float(mg.value) +
          " at n=" + std::to_string(mg.index) + ", limit " + format_float(limit) + ")");
    } else {
      const analysis::CheckReport report =
          analysis::compare_to_bound(result.stats, bound);
      failed = failed || !report.pass;
      outcome.report_lines.push_back(
          "bound " + *config.outputs.bound_theorem + ": " +
          (report.pass ? "PASS" : "FAIL") + " (" +
          std::to_string(report.violations.size()) + " of " +
          std::to_string(result.stats.mean_f.size()) +
          " iterations exceed bound by more than 3 SEM)");
    }
  }
  if (result.lyapunov) {
    const analysis::CheckReport report =
        analysis::check_lyapunov_monotone(*result.lyapunov, contraction);
    failed = failed || !report.pass;
    std::string line = "lyapunov " + *config.outputs.lyapunov_kind;
    if (contraction) line += " (contraction " + format_float(*contraction) + ")";
    line += std::string(": ") + (report.pass ? "PASS" : "FAIL") + " (" +
            std::to_string(report.violations.size()) + " violations)";
    outcome.report_lines.push_back(line);
  }
  if (config.outputs.slope_tail_fraction) {
    try {
      const double slope = analysis::loglog_slope(
          result.stats, *config.outputs.slope_tail_fraction);
      outcome.report_lines.push_back(
          "loglog slope (tail " + format_float(*config.outputs.slope_tail_fraction) +
          "): " + format_float(slope));
    } catch (const UndefinedSlopeError& e) {
      outcome.report_lines.push_back(std::string("loglog slope: undefined (") +
                                     e.what() + ")");
    }
  }

  if (config.outputs.ensemble_csv) {
    const std::string path = out_dir + "/" + config.name + ".csv";
    write_file(path, ensemble_csv_body(result.stats,
                                       bound_theorem ? &bound : nullptr));
    outcome.written_files.push_back(path);
  }
  if (result.lyapunov) {
    const std::string path = out_dir + "/" + config.name + "_lyapunov.csv";
    write_file(path, lyapunov_csv_body(*result.lyapunov));
    outcome.written_files.push_back(path);
  }
  if (config.outputs.wants_report()) {
    const std::string path = out_dir + "/" + config.name + "_report.txt";
    std::string body;
    for (const std::string& line : outcome.report_lines) body += line + "\n";
    write_file(path, body);
    outcome.written_files.push_back(path);
  }

  outcome.exit_code = failed ? 2 : 0;
  return outcome;
}

// ---------------------------------------------------------------------------
// Presets.

namespace {

constexpr std::uint64_t kPresetBaseSeed = 1000;

std::string sigma_tag(double sigma) {
  const long s = static_cast<long>(sigma);
  return std::to_string(s);
}

int run_figure3(const std::string& out_dir, std::uint64_t base_seed, int threads) {
  int worst = 0;
  std::uint64_t series = 0;
  for (int d : {4, 16}) {
    for (double sigma : {0.0, 10.0, 50.0}) {
      for (const std::string alg : {"sgd", "nag", "agnes"}) {
        objectives::Objective obj = objectives::Objective::power_hinge(d);
        noise::NoiseModel nm = noise::NoiseModel::collinear(sigma);
        const params::ProblemClass pc = problem_class_of(obj, nm);
        optim::OptimizerConfig opt;
        if (alg == "sgd") {
          opt = optim::OptimizerConfig::sgd(params::sgd_params(pc).eta);
        } else if (alg == "nag") {
          // The experiment recipe: gradient-descent step size with the
          // plain n/(n+3) schedule, run at any sigma.
          opt = optim::OptimizerConfig::nag(
              params::sgd_params(pc).eta, optim::MomentumSchedule::polynomial(0.0));
        } else {
          const auto p = params::agnes_convex_params(pc);
          opt = optim::OptimizerConfig::agnes(p.eta, p.alpha, p.schedule);
        }
        opt.report = optim::ReportPoint::iterate;
        ExperimentConfig config(std::move(obj), std::move(nm), opt);
        config.name = "figure3_d" + std::to_string(d) + "_sigma" + sigma_tag(sigma) +
                      "_" + alg;
        config.x0 = Vec::Constant(1, 1.0);
        config.iters = 10000;
        config.runs = 200;
        config.master_seed = base_seed + series++;
        worst = std::max(worst, run_experiment(config, out_dir, threads).exit_code);
      }
    }
  }
  return worst;
}

int run_figure4(const std::string& out_dir, std::uint64_t base_seed, int threads) {
  int worst = 0;
  std::uint64_t series = 100;
  for (double L : {500.0, 10000.0}) {
    for (double sigma : {0.0, 10.0, 50.0}) {
      for (const std::string alg : {"sgd", "agnes"}) {
        objectives::Objective obj = objectives::Objective::quadratic2d(1.0, L);
        noise::NoiseModel nm = noise::NoiseModel::isotropic(sigma);
        const params::ProblemClass pc = problem_class_of(obj, nm);
        optim::OptimizerConfig opt;
        if (alg == "sgd") {
          opt = optim::OptimizerConfig::sgd(params::sgd_params(pc).eta);
        } else {
          const auto p = params::agnes_strongly_convex_params(pc);
          opt = optim::OptimizerConfig::agnes(p.eta, p.alpha,
                                              optim::MomentumSchedule::constant(p.rho));
        }
        opt.report = optim::ReportPoint::iterate;
        ExperimentConfig config(std::move(obj), std::move(nm), opt);
        config.name = "figure4_L" + std::to_string(static_cast<long>(L)) + "_sigma" +
                      sigma_tag(sigma) + "_" + alg;
        config.x0 = Vec::Constant(2, 0.1);
        config.iters = 10000;
        config.runs = 1000;
        config.master_seed = base_seed + series++;
        worst = std::max(worst, run_experiment(config, out_dir, threads).exit_code);
      }
    }
  }
  return worst;
}

long empirical_crossing(const std::vector<double>& mean_f, double eps) {
  for (std::size_t n = 0; n < mean_f.size(); ++n) {
    if (mean_f[n] < eps) return static_cast<long>(n);
  }
  return -1;
}

int run_figure1(const std::string& out_dir, std::uint64_t base_seed, int threads) {
  constexpr double kEps = 1e-3;
  const objectives::Objective obj = objectives::Objective::quadratic2d(1.0, 500.0);
  const noise::NoiseModel nm = noise::NoiseModel::isotropic(10.0);
  const params::ProblemClass pc = problem_class_of(obj, nm);
  const Vec x0 = Vec::Constant(2, 0.1);

  params::Anchors anchors;
  anchors.f_gap0 = obj.eval(x0);
  anchors.dist_sq0 = x0.squaredNorm();
  // Bound curves are cheap; evaluate far beyond the simulated horizon so the
  // crossings are visible.
  const long bound_horizon = 1000000;
  const auto agnes_bound = params::bound_curve(
      params::Theorem::agnes_strongly_convex, pc, anchors, bound_horizon);
  const auto sgd_bound =
      params::bound_curve(params::Theorem::gd_pl, pc, anchors, bound_horizon);
  const long agnes_bound_n = params::iterations_to_epsilon(agnes_bound, kEps);
  const long sgd_bound_n = params::iterations_to_epsilon(sgd_bound, kEps);

  analysis::EnsembleOptions opts;
  opts.iters = 10000;
  opts.runs = 1000;
  opts.threads = threads;

  const auto agnes_params = params::agnes_strongly_convex_params(pc);
  optim::OptimizerConfig agnes_cfg = optim::OptimizerConfig::agnes(
      agnes_params.eta, agnes_params.alpha,
      optim::MomentumSchedule::constant(agnes_params.rho));
  agnes_cfg.report = optim::ReportPoint::iterate;
  opts.master_seed = base_seed + 200;
  const auto agnes_stats =
      analysis::run_ensemble(agnes_cfg, obj, nm, x0, opts).stats;

  optim::OptimizerConfig sgd_cfg =
      optim::OptimizerConfig::sgd(params::sgd_params(pc).eta);
  sgd_cfg.report = optim::ReportPoint::iterate;
  opts.master_seed = base_seed + 201;
  const auto sgd_stats = analysis::run_ensemble(sgd_cfg, obj, nm, x0, opts).stats;

  const long agnes_emp = empirical_crossing(agnes_stats.mean_f, kEps);
  const long sgd_emp = empirical_crossing(sgd_stats.mean_f, kEps);

  const bool bound_order = agnes_bound_n >= 0 &&
                           (sgd_bound_n < 0 || agnes_bound_n < sgd_bound_n);
  const bool emp_order = agnes_emp >= 0 && (sgd_emp < 0 || agnes_emp < sgd_emp);

  fs::create_directories(out_dir);
  std::string csv = "series,source,iterations_to_eps\n";
  auto row = [&](const char* series, const char* source, long n) {
    csv += series;
    csv += ',';
    csv += source;
    csv += ',';
    csv += (n < 0 ? std::string("") : std::to_string(n));
    csv += '\n';
  };
  row("agnes", "bound", agnes_bound_n);
  row("sgd", "bound", sgd_bound_n);
  row("agnes", "empirical", agnes_emp);
  row("sgd", "empirical", sgd_emp);
  write_file(out_dir + "/figure1_crossings.csv", csv);

  std::string report;
  report += "eps = " + format_float(kEps) + ", L = 500, mu = 1, sigma = 10\n";
  report += "bound crossings: agnes = " + std::to_string(agnes_bound_n) +
            ", sgd = " + std::to_string(sgd_bound_n) + "\n";
  report += "empirical crossings (10000-iteration horizon, -1 = not reached): agnes = " +
            std::to_string(agnes_emp) + ", sgd = " + std::to_string(sgd_emp) + "\n";
  report += std::string("ordering from bounds (agnes < sgd): ") +
            (bound_order ? "PASS" : "FAIL") + "\n";
  report += std::string("ordering from ensembles (agnes < sgd): ") +
            (emp_order ? "PASS" : "FAIL") + "\n";
  write_file(out_dir + "/figure1_report.txt", report);
  return (bound_order && emp_order) ? 0 : 2;
}

int run_lemma1(const std::string& out_dir, std::uint64_t base_seed, int threads) {
  (void)threads;
  RngStream rng(base_seed + 300);
  const long widths[] = {10, 100};
  const long samples[] = {5, 50};
  const long outputs[] = {1, 3};
  std::string csv = "sample,lhs,rhs,ratio,grad_norm_sq,risk\n";
  long violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const long m = widths[i % 2];
    const long n = samples[(i / 2) % 2];
    const long k = outputs[(i / 4) % 2];
    const auto model = overparam::RandomFeatureModel::random(n, m, k, rng);
    const auto lemma = overparam::check_lemma_bound(model);
    if (!lemma.holds) ++violations;
    const double gsq = overparam::full_grad(model).squaredNorm();
    csv += std::to_string(i);
    csv += ',';
    csv += format_float(lemma.lhs);
    csv += ',';
    csv += format_float(lemma.rhs);
    csv += ',';
    csv += format_float(gsq > 0.0 ? lemma.lhs / gsq : 0.0);
    csv += ',';
    csv += format_float(gsq);
    csv += ',';
    csv += format_float(overparam::risk(model));
    csv += '\n';
  }
  fs::create_directories(out_dir);
  write_file(out_dir + "/lemma1.csv", csv);

  std::string report;
  report += "risk-proportional bound: " +
            std::string(violations == 0 ? "PASS" : "FAIL") + " (" +
            std::to_string(violations) + " of 1000 instances violate)\n";
  bool scan_ok = true;
  RngStream scan_rng(base_seed + 301);
  const auto model = overparam::RandomFeatureModel::random(12, 20, 2, scan_rng);
  for (int n_b : {2, 4, 8}) {
    const auto scan =
        overparam::minibatch_variance_scan(model, n_b, 200000, scan_rng);
    scan_ok = scan_ok && scan.within;
    report += "minibatch variance, n_b=" + std::to_string(n_b) + ": " +
              (scan.within ? "PASS" : "FAIL") + " (empirical " +
              format_float(scan.empirical) + ", predicted " +
              format_float(scan.predicted) + ", sem " + format_float(scan.sem) + ")\n";
  }
  write_file(out_dir + "/lemma1_report.txt", report);
  return (violations == 0 && scan_ok) ? 0 : 2;
}

int run_nonconvex(const std::string& out_dir, std::uint64_t base_seed, int threads) {
  int worst = 0;
  std::uint64_t series = 400;
  for (double sigma : {0.0, 1.0}) {
    objectives::Objective obj = objectives::Objective::sine_valley();
    noise::NoiseModel nm = noise::NoiseModel::collinear(sigma);
    const params::ProblemClass pc = problem_class_of(obj, nm);
    const double s2 = sigma * sigma;
    const double eta = 1.0 / (pc.L * (1.0 + s2));
    const double alpha = 0.5 * eta / (1.0 + s2);
    const double rho = 1.0 / std::sqrt(1.0 + pc.L * alpha);
    optim::OptimizerConfig opt = optim::OptimizerConfig::agnes(
        eta, alpha, optim::MomentumSchedule::constant(rho));
    opt.report = optim::ReportPoint::iterate;
    ExperimentConfig config(std::move(obj), std::move(nm), opt);
    config.name = "nonconvex_sigma" + sigma_tag(sigma);
    config.x0 = Vec(2);
    config.x0 << 1.5, -0.5;
    config.iters = 2000;
    config.runs = 500;
    config.master_seed = base_seed + series++;
    config.outputs.bound_theorem = "non_convex";
    config.outputs.lyapunov_kind = "non_convex";
    worst = std::max(worst, run_experiment(config, out_dir, threads).exit_code);
  }
  return worst;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"figure1", "figure3", "figure4", "lemma1", "nonconvex"};
}

int run_preset(const std::string& name, const std::string& out_dir,
               std::optional<std::uint64_t> seed_override, int threads) {
  const std::uint64_t base = seed_override.value_or(kPresetBaseSeed);
  if (name == "figure1") return run_figure1(out_dir, base, threads);
  if (name == "figure3") return run_figure3(out_dir, base, threads);
  if (name == "figure4") return run_figure4(out_dir, base, threads);
  if (name == "lemma1") return run_lemma1(out_dir, base, threads);
  if (name == "nonconvex") return run_nonconvex(out_dir, base, threads);
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace agneslab::experiment
