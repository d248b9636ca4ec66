#include "agneslab/optim.hpp"

#include <algorithm>
#include <cmath>

namespace agneslab::optim {

MomentumSchedule MomentumSchedule::constant(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw ContractViolation("momentum schedule: constant rho must be in [0, 1)");
  }
  MomentumSchedule s;
  s.kind = Kind::constant;
  s.rho = rho;
  return s;
}

MomentumSchedule MomentumSchedule::polynomial(double n0) {
  if (!(n0 >= 0.0)) {
    throw ContractViolation("momentum schedule: polynomial n0 must be >= 0");
  }
  MomentumSchedule s;
  s.kind = Kind::polynomial;
  s.n0 = n0;
  return s;
}

OptimizerConfig OptimizerConfig::sgd(double eta) {
  OptimizerConfig cfg;
  cfg.algorithm = Algorithm::sgd;
  cfg.eta = eta;
  cfg.alpha = 0.0;
  cfg.schedule = MomentumSchedule::constant(0.0);
  cfg.validate();
  return cfg;
}

OptimizerConfig OptimizerConfig::nag(double eta, MomentumSchedule schedule) {
  OptimizerConfig cfg;
  cfg.algorithm = Algorithm::nag;
  cfg.eta = eta;
  cfg.alpha = eta;
  cfg.schedule = schedule;
  cfg.validate();
  return cfg;
}

OptimizerConfig OptimizerConfig::agnes(double eta, double alpha,
                                       MomentumSchedule schedule) {
  OptimizerConfig cfg;
  cfg.algorithm = Algorithm::agnes;
  cfg.eta = eta;
  cfg.alpha = alpha;
  cfg.schedule = schedule;
  cfg.validate();
  return cfg;
}

OptimizerConfig OptimizerConfig::general_agnes(double eta, double gamma1,
                                               double gamma2,
                                               MomentumSchedule schedule) {
  OptimizerConfig cfg;
  cfg.algorithm = Algorithm::general_agnes;
  cfg.eta = eta;
  cfg.gamma1_raw = gamma1;
  cfg.gamma2_raw = gamma2;
  cfg.schedule = schedule;
  cfg.validate();
  return cfg;
}

void OptimizerConfig::validate() const {
  if (!(eta > 0.0)) throw ContractViolation("optimizer: eta must be > 0");
  if (!(lambda >= 0.0)) throw ContractViolation("optimizer: lambda must be >= 0");
  if (!std::isfinite(alpha)) throw ContractViolation("optimizer: alpha must be finite");
  if (schedule.kind == MomentumSchedule::Kind::constant) {
    if (!(schedule.rho >= 0.0 && schedule.rho < 1.0)) {
      throw ContractViolation("optimizer: rho must be in [0, 1)");
    }
  } else if (!(schedule.n0 >= 0.0)) {
    throw ContractViolation("optimizer: schedule n0 must be >= 0");
  }
}

std::string OptimizerConfig::algorithm_name() const {
  switch (algorithm) {
    case Algorithm::sgd: return "sgd";
    case Algorithm::nag: return "nag";
    case Algorithm::agnes: return "agnes";
    case Algorithm::general_agnes: return "general_agnes";
  }
  return "optimizer";
}

OptimizerState OptimizerState::init(Vec x0, RngStream rng) {
  OptimizerState s;
  s.v = Vec::Zero(x0.size());
  s.x = std::move(x0);
  s.rng = rng;
  return s;
}

TwoStepState TwoStepState::init(Vec x0, RngStream rng) {
  TwoStepState s;
  s.xprime = x0;
  s.x = std::move(x0);
  s.rng = rng;
  return s;
}

OptimizerState step(const OptimizerConfig& cfg, const Differentiable& obj,
                    const noise::NoiseModel& noise_model,
                    OptimizerState state) {
  cfg.validate();
  if (state.x.size() != obj.dimension()) {
    throw ContractViolation("step: state dimension mismatch");
  }
  if (state.diverged) {
    state.n += 1;
    return state;
  }
  const Vec query = cfg.algorithm == Algorithm::sgd
                        ? state.x
                        : Vec(state.x + cfg.gamma1() * state.v);
  Vec g_true = obj.grad(query);
  Vec g(obj.dimension()), x_new(obj.dimension()), v_new(obj.dimension());
  noise_model.sample(g_true, state.rng, g);
  if (!detail::apply_update(cfg, cfg.schedule.at(state.n), query, g, state.x,
                            state.v, x_new, v_new)) {
    state.diverged = true;
  }
  state.n += 1;
  return state;
}

TwoStepState step_two_step_form(const OptimizerConfig& cfg,
                                const Differentiable& obj,
                                const noise::NoiseModel& noise_model,
                                TwoStepState state) {
  cfg.validate();
  if (cfg.algorithm != Algorithm::agnes && cfg.algorithm != Algorithm::nag) {
    throw ContractViolation("two-step form: algorithm must be agnes or nag");
  }
  if (cfg.weight_decay != WeightDecayMode::none) {
    throw UnsupportedConfiguration("two-step form: weight decay not defined");
  }
  if (state.x.size() != obj.dimension()) {
    throw ContractViolation("two-step form: state dimension mismatch");
  }
  if (state.diverged) {
    state.n += 1;
    return state;
  }
  Vec g_true = obj.grad(state.xprime);
  Vec g(obj.dimension());
  noise_model.sample(g_true, state.rng, g);
  const double rho_n = cfg.schedule.at(state.n);
  Vec x_next = state.xprime - cfg.eta * g;
  Vec xprime_next =
      x_next + rho_n * (state.xprime - cfg.gamma1() * g - state.x);
  if (!x_next.allFinite() || !xprime_next.allFinite()) {
    state.diverged = true;
  } else {
    state.x.swap(x_next);
    state.xprime.swap(xprime_next);
  }
  state.n += 1;
  return state;
}

Trajectory run(const OptimizerConfig& cfg, const Differentiable& obj,
               const noise::NoiseModel& noise_model, const Vec& x0, long iters,
               std::uint64_t seed) {
  if (iters < 1) throw ContractViolation("run: iters must be >= 1");
  Trajectory t;
  const long len = iters + 1 + (cfg.final_gradient_step ? 1 : 0);
  t.f_query.reserve(len);
  t.f_iterate.reserve(len);
  t.grad_sq_query.reserve(len);
  t.diverged.reserve(len);
  t.final_state = drive(cfg, obj, noise_model, x0, iters, RngStream(seed),
                        [&](const StepRecord& r) {
                          t.f_query.push_back(r.f_query);
                          t.f_iterate.push_back(r.f_iterate);
                          t.grad_sq_query.push_back(r.grad_sq_query);
                          t.diverged.push_back(r.diverged ? 1 : 0);
                        });
  return t;
}

namespace {

double relative_deviation(const Vec& a, const Vec& b) {
  const double d = (a - b).norm();
  if (d == 0.0) return 0.0;
  return d / std::max(a.norm(), b.norm());
}

}  // namespace

double check_formulation_equivalence(const OptimizerConfig& cfg,
                                     const Differentiable& obj,
                                     const noise::NoiseModel& noise_model,
                                     const Vec& x0, long iters,
                                     std::uint64_t seed) {
  if (cfg.algorithm != Algorithm::agnes && cfg.algorithm != Algorithm::nag) {
    throw ContractViolation("formulation equivalence: algorithm must be agnes or nag");
  }
  if (iters < 0) throw ContractViolation("formulation equivalence: iters must be >= 0");
  OptimizerState a = OptimizerState::init(x0, RngStream(seed));
  TwoStepState b = TwoStepState::init(x0, RngStream(seed));
  double worst = 0.0;
  for (long n = 0; n < iters; ++n) {
    a = step(cfg, obj, noise_model, a);
    b = step_two_step_form(cfg, obj, noise_model, b);
    worst = std::max(worst, relative_deviation(a.x, b.x));
  }
  return worst;
}

double check_gamma_invariance(double eta, double rho, double g1a, double g2a,
                              double g1b, double g2b, const Differentiable& obj,
                              const noise::NoiseModel& noise_model,
                              const Vec& x0, long iters, std::uint64_t seed) {
  const double pa = g1a * g2a, pb = g1b * g2b;
  if (std::abs(pa - pb) > 1e-14 * std::max(std::abs(pa), std::abs(pb))) {
    throw ContractViolation("gamma invariance: gamma1*gamma2 products differ");
  }
  if (iters < 0) throw ContractViolation("gamma invariance: iters must be >= 0");
  const MomentumSchedule sched = MomentumSchedule::constant(rho);
  const OptimizerConfig ca = OptimizerConfig::general_agnes(eta, g1a, g2a, sched);
  const OptimizerConfig cb = OptimizerConfig::general_agnes(eta, g1b, g2b, sched);
  OptimizerState a = OptimizerState::init(x0, RngStream(seed));
  OptimizerState b = OptimizerState::init(x0, RngStream(seed));
  double worst = 0.0;
  for (long n = 0; n < iters; ++n) {
    a = step(ca, obj, noise_model, a);
    b = step(cb, obj, noise_model, b);
    worst = std::max(worst, relative_deviation(a.x, b.x));
  }
  return worst;
}

}  // namespace agneslab::optim
