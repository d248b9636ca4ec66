#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "agneslab/errors.hpp"
#include "agneslab/noise.hpp"
#include "agneslab/objectives.hpp"
#include "agneslab/rng.hpp"
#include "agneslab/types.hpp"

namespace agneslab::optim {

using objectives::Differentiable;

struct MomentumSchedule {
  enum class Kind { constant, polynomial };

  Kind kind = Kind::constant;
  double rho = 0.0;  // constant value
  double n0 = 0.0;   // polynomial offset: rho_n = (n + n0) / (n + n0 + 3)

  static MomentumSchedule constant(double rho);
  static MomentumSchedule polynomial(double n0);

  double at(long n) const {
    if (kind == Kind::constant) return rho;
    const double z = static_cast<double>(n) + n0;
    return z / (z + 3.0);
  }
};

enum class Algorithm { sgd, nag, agnes, general_agnes };
enum class WeightDecayMode { none, dynamic, objective_penalty };
enum class ReportPoint { query_point, iterate };

/// Algorithm choice plus hyperparameters. `alpha` is the momentum step size
/// of the AGNES family (negative values are allowed); NAG is AGNES with
/// alpha = eta, kept distinct for reporting. The general form splits the
/// momentum coupling into gamma1 (position side) and gamma2 (velocity side);
/// only the product matters for the generated iterates.
struct OptimizerConfig {
  Algorithm algorithm = Algorithm::agnes;
  double eta = 1e-2;
  double alpha = 1e-3;
  double gamma1_raw = 0.0;
  double gamma2_raw = 0.0;
  MomentumSchedule schedule = MomentumSchedule::constant(0.99);
  WeightDecayMode weight_decay = WeightDecayMode::none;
  double lambda = 0.0;
  bool final_gradient_step = false;
  ReportPoint report = ReportPoint::query_point;

  static OptimizerConfig sgd(double eta);
  static OptimizerConfig nag(double eta, MomentumSchedule schedule);
  static OptimizerConfig agnes(double eta, double alpha,
                               MomentumSchedule schedule);
  static OptimizerConfig general_agnes(double eta, double gamma1,
                                       double gamma2,
                                       MomentumSchedule schedule);

  double gamma1() const {
    switch (algorithm) {
      case Algorithm::sgd: return 0.0;
      case Algorithm::nag: return eta;
      case Algorithm::agnes: return alpha;
      case Algorithm::general_agnes: return gamma1_raw;
    }
    return 0.0;
  }
  double gamma2() const {
    return algorithm == Algorithm::general_agnes ? gamma2_raw : 1.0;
  }

  void validate() const;
  std::string algorithm_name() const;
};

/// Evolving (n, x, v) triple with its random stream. The query point
/// x' = x + gamma1 * v is derived, never stored.
struct OptimizerState {
  long n = 0;
  Vec x;
  Vec v;
  RngStream rng;
  bool diverged = false;

  static OptimizerState init(Vec x0, RngStream rng);
  Vec query_point(const OptimizerConfig& cfg) const {
    return x + cfg.gamma1() * v;
  }
};

/// State of the two-step formulation, which tracks (x_n, x'_n) instead of a
/// velocity. Consumes the random stream in the same layout as the
/// three-step form.
struct TwoStepState {
  long n = 0;
  Vec x;
  Vec xprime;
  RngStream rng;
  bool diverged = false;

  static TwoStepState init(Vec x0, RngStream rng);
};

namespace detail {

inline bool all_finite(const Vec& a) { return a.allFinite(); }

/// One (x, v) update given the sampled gradient at the query point.
/// Returns false and leaves x, v untouched when the update is non-finite.
inline bool apply_update(const OptimizerConfig& cfg, double rho_n,
                         const Vec& query, const Vec& g, Vec& x, Vec& v,
                         Vec& x_new, Vec& v_new) {
  const double decay =
      cfg.weight_decay == WeightDecayMode::none ? 1.0 : 1.0 - cfg.lambda * cfg.eta;
  if (cfg.algorithm == Algorithm::sgd) {
    // Both weight-decay readings coincide for plain gradient descent.
    x_new = decay * x - cfg.eta * g;
    if (!all_finite(x_new)) return false;
    x.swap(x_new);
    return true;
  }
  x_new = decay * query - cfg.eta * g;
  if (cfg.weight_decay == WeightDecayMode::objective_penalty) {
    // Penalty gradient lambda * x' joins the estimate in the velocity
    // recurrence; the position update already carries it via `decay`.
    v_new = rho_n * (v - cfg.gamma2() * (g + cfg.lambda * query));
  } else {
    v_new = rho_n * (v - cfg.gamma2() * g);
  }
  if (!all_finite(x_new) || !all_finite(v_new)) return false;
  x.swap(x_new);
  v.swap(v_new);
  return true;
}

}  // namespace detail

/// Per-iteration view handed to trajectory observers. Objective values are
/// capped at kDivergenceCap once the trajectory is flagged.
struct StepRecord {
  long n;
  const Vec& x;
  const Vec& query;
  double f_iterate;
  double f_query;
  double grad_sq_query;
  bool diverged;
};

/// Core trajectory driver shared by `run` and the ensemble machinery.
/// Calls `observe` with records n = 0..iters (plus one more when the final
/// gradient step is enabled) and returns the final state. Exactly one noise
/// sample is drawn per iteration.
template <class Observer>
OptimizerState drive(const OptimizerConfig& cfg, const Differentiable& obj,
                     const noise::NoiseModel& noise_model, const Vec& x0,
                     long iters, RngStream rng, Observer&& observe) {
  cfg.validate();
  if (iters < 0) throw ContractViolation("drive: iters must be >= 0");
  if (x0.size() != obj.dimension()) {
    throw ContractViolation("drive: x0 dimension mismatch");
  }

  OptimizerState state = OptimizerState::init(x0, rng);
  const bool sgd = cfg.algorithm == Algorithm::sgd;
  Vec query = x0, g_true(obj.dimension()), g(obj.dimension());
  Vec x_new(obj.dimension()), v_new(obj.dimension());
  double frozen_fi = 0.0, frozen_fq = 0.0, frozen_gsq = 0.0;

  auto capped = [](double value) {
    return std::isfinite(value) ? std::min(value, kDivergenceCap)
                                : kDivergenceCap;
  };

  for (long n = 0;; ++n) {
    double fi, fq, gsq;
    if (!state.diverged) {
      if (sgd) {
        query = state.x;
      } else {
        query = state.x + cfg.gamma1() * state.v;
      }
      fq = obj.eval(query);
      fi = sgd ? fq : obj.eval(state.x);
      obj.grad(query, g_true);
      gsq = g_true.squaredNorm();
      if (!std::isfinite(fi) || !std::isfinite(fq) || fi > kDivergenceCap ||
          fq > kDivergenceCap) {
        state.diverged = true;
        frozen_fi = capped(fi);
        frozen_fq = capped(fq);
        frozen_gsq = capped(gsq);
      }
    }
    if (state.diverged) {
      fi = frozen_fi;
      fq = frozen_fq;
      gsq = frozen_gsq;
    }
    observe(StepRecord{n, state.x, query, fi, fq, gsq, state.diverged});
    if (n == iters) break;
    if (state.diverged) {
      state.n = n + 1;
      continue;
    }
    noise_model.sample(g_true, state.rng, g);
    if (!detail::apply_update(cfg, cfg.schedule.at(n), query, g, state.x,
                              state.v, x_new, v_new)) {
      state.diverged = true;
      frozen_fi = capped(fi);
      frozen_fq = capped(fq);
      frozen_gsq = capped(gsq);
    }
    state.n = n + 1;
  }

  if (cfg.final_gradient_step) {
    if (!state.diverged) {
      noise_model.sample(g_true, state.rng, g);
      state.x = query - cfg.eta * g;
      if (!detail::all_finite(state.x)) {
        state.x = query;
        state.diverged = true;
        frozen_fi = frozen_fq = frozen_gsq = kDivergenceCap;
      } else {
        query = state.x;
        const double f = obj.eval(state.x);
        obj.grad(state.x, g_true);
        frozen_fi = capped(f);
        frozen_fq = frozen_fi;
        frozen_gsq = capped(g_true.squaredNorm());
        if (f > kDivergenceCap || !std::isfinite(f)) state.diverged = true;
      }
    }
    observe(StepRecord{iters + 1, state.x, query, frozen_fi, frozen_fq,
                       frozen_gsq, state.diverged});
  }
  return state;
}

/// One full iteration of the configured optimizer.
OptimizerState step(const OptimizerConfig& cfg, const Differentiable& obj,
                    const noise::NoiseModel& noise_model, OptimizerState state);

/// One iteration of the two-step formulation.
TwoStepState step_two_step_form(const OptimizerConfig& cfg,
                                const Differentiable& obj,
                                const noise::NoiseModel& noise_model,
                                TwoStepState state);

/// Full per-iteration record of one trajectory; arrays hold iters + 1 values
/// (one more when the final gradient step is enabled).
struct Trajectory {
  std::vector<double> f_query;
  std::vector<double> f_iterate;
  std::vector<double> grad_sq_query;
  std::vector<std::uint8_t> diverged;
  OptimizerState final_state;

  const std::vector<double>& f_reported(const OptimizerConfig& cfg) const {
    return cfg.report == ReportPoint::iterate ? f_iterate : f_query;
  }
};

Trajectory run(const OptimizerConfig& cfg, const Differentiable& obj,
               const noise::NoiseModel& noise_model, const Vec& x0, long iters,
               std::uint64_t seed);

/// Runs the two formulations on identical random streams and returns the
/// largest relative deviation between the generated x sequences.
double check_formulation_equivalence(const OptimizerConfig& cfg,
                                     const Differentiable& obj,
                                     const noise::NoiseModel& noise_model,
                                     const Vec& x0, long iters,
                                     std::uint64_t seed);

/// Runs the general scheme with two (gamma1, gamma2) pairs of equal product
/// on identical streams; returns the largest relative deviation of the x
/// sequences. The products must agree to 1e-14 relative.
double check_gamma_invariance(double eta, double rho, double g1a, double g2a,
                              double g1b, double g2b, const Differentiable& obj,
                              const noise::NoiseModel& noise_model,
                              const Vec& x0, long iters, std::uint64_t seed);

}  // namespace agneslab::optim
