#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "agneslab/noise.hpp"
#include "agneslab/objectives.hpp"
#include "agneslab/optim.hpp"
#include "agneslab/types.hpp"

namespace agneslab::analysis {

/// Per-iteration mean/spread across seeded runs. Diverged runs contribute
/// values capped at kDivergenceCap and are counted in diverged_fraction.
/// mean_f / sem_f refer to the configured report point; the iterate and
/// query-point series are both kept. All arrays share one length.
struct EnsembleStats {
  int runs = 0;
  long iters = 0;
  optim::ReportPoint report = optim::ReportPoint::query_point;
  std::vector<double> mean_f, sem_f;
  std::vector<double> mean_f_iterate, sem_f_iterate;
  std::vector<double> mean_f_query, sem_f_query;
  std::vector<double> mean_grad_sq, sem_grad_sq;
  std::vector<double> diverged_fraction;
};

/// Scalar sequence combining the function gap with a weighted distance term;
/// the proofs certify it non-increasing (or geometrically contracting).
/// Evaluated as an ensemble mean over runs, accumulated online.
struct LyapunovSpec {
  enum class Kind {
    convex_agnes,     // (a(n+n0)+2e)(n+n0) gap + 1/2 ||(n+n0)(x'-x)+2(x'-x*)||^2
    convex_nag,       // e n(n+2) gap + 1/2 ||n(x'-x)+2(x'-x*)||^2
    convex_gd,        // e (n+n0) gap + 1/2 ||x-x*||^2
    strongly_convex,  // gap + 1/2 ||b(x'-x)+a(x'-x*)||^2, a=sqrt(mu), b=1/psi
    non_convex        // f + (lambda/2)||x'-x||^2, lambda = 1/(alpha rho^2)
  };

  Kind kind;
  double alpha = 0.0;
  double eta = 0.0;
  double n0 = 0.0;
  double a = 0.0;
  double b = 0.0;
  double lambda = 0.0;
  double f_star = 0.0;
  std::optional<Vec> x_star;

  static LyapunovSpec convex_agnes(double alpha, double eta, double n0,
                                   double f_star, Vec x_star);
  static LyapunovSpec convex_nag(double eta, double f_star, Vec x_star);
  static LyapunovSpec convex_gd(double eta, double n0, double f_star,
                                Vec x_star);
  static LyapunovSpec strongly_convex(double mu, double psi, double f_star,
                                      Vec x_star);
  static LyapunovSpec non_convex(double alpha, double rho);
};

struct LyapunovSeries {
  LyapunovSpec::Kind kind;
  std::vector<double> values;
  std::vector<double> sems;
};

struct EnsembleOptions {
  long iters = 0;
  int runs = 0;
  std::uint64_t master_seed = 0;
  int threads = 0;  // 0: hardware concurrency
};

struct EnsembleResult {
  EnsembleStats stats;
  std::optional<LyapunovSeries> lyapunov;
};

/// Runs `runs` trajectories with per-run streams derived from
/// (master_seed, run index). Bitwise deterministic and independent of the
/// worker count: runs are reduced in fixed blocks, in run order.
EnsembleResult run_ensemble(const optim::OptimizerConfig& cfg,
                            const objectives::Differentiable& obj,
                            const noise::NoiseModel& noise_model,
                            const Vec& x0, const EnsembleOptions& opts,
                            const std::optional<LyapunovSpec>& lyapunov = {});

struct CheckReport {
  bool pass = true;
  std::vector<long> violations;
};

/// Flags every n where L_{n+1} > c * L_n + sem_multiplier * (sem_{n+1} +
/// c * sem_n) + a small rounding guard (1e-12 relative). c defaults to 1.
CheckReport check_lyapunov_monotone(const LyapunovSeries& series,
                                    std::optional<double> contraction = {},
                                    double sem_multiplier = 3.0);

/// Flags every n where mean - sem_multiplier * sem exceeds bound(n).
CheckReport compare_to_bound(const std::vector<double>& mean,
                             const std::vector<double>& sem,
                             const std::vector<double>& bound,
                             double sem_multiplier = 3.0);
CheckReport compare_to_bound(const EnsembleStats& stats,
                             const std::vector<double>& bound,
                             double sem_multiplier = 3.0);

/// Least-squares slope of log mean_f against log n over the final
/// tail_fraction of iterations (n >= 1). Throws UndefinedSlopeError on
/// non-positive values in the window.
double loglog_slope(const std::vector<double>& mean_f, double tail_fraction);
double loglog_slope(const EnsembleStats& stats, double tail_fraction);

struct MinGrad {
  double value = 0.0;
  long index = 0;
};

/// Running minimum of mean ||grad f(x')||^2 with its location.
MinGrad min_grad_report(const EnsembleStats& stats);

}  // namespace agneslab::analysis
