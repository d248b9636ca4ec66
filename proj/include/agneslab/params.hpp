#pragma once

#include <optional>
#include <vector>

#include "agneslab/optim.hpp"
#include "agneslab/types.hpp"

namespace agneslab::params {

/// Analytic problem description the derivations work from. Parameters are
/// never estimated from trajectories.
struct ProblemClass {
  double L = 1.0;
  std::optional<double> mu;
  std::optional<double> mu_pl;
  double sigma = 0.0;

  void validate() const;
};

struct AgnesConvexParams {
  double eta;
  double alpha;
  double n0;
  optim::MomentumSchedule schedule;  // rho_n = (n + n0) / (n + n0 + 3)
};

struct AgnesStronglyConvexParams {
  double eta;
  double alpha;
  double rho;
};

struct AgnesScGeneralParams {
  double rho;
  double alpha;
  double decay;  // guaranteed per-step factor 1 - sqrt(mu) * psi
};

struct NagConvexParams {
  double eta;
  optim::MomentumSchedule schedule;  // rho_n = n / (n + 3)
};

struct NagStronglyConvexParams {
  double eta;
  double rho;
};

struct SgdParams {
  double eta;
  double n0;
};

/// eta = 1/(L(1+s^2)), alpha = eta/(1+2s^2), n0 = 2 eta/alpha = 2(1+2s^2).
AgnesConvexParams agnes_convex_params(const ProblemClass& pc);

/// eta = 1/(L(1+s^2)), rho = (sqrt(L)(1+s^2) - sqrt(mu)) / (... + sqrt(mu)),
/// alpha = (1 - sqrt(mu/L)) / (1 - sqrt(mu/L) + s^2) * eta. The 0/0 corner
/// mu = L, sigma = 0 resolves to alpha = eta.
AgnesStronglyConvexParams agnes_strongly_convex_params(const ProblemClass& pc);

/// One-parameter family indexed by psi in (0, sqrt(eta/(1+s^2))]:
/// rho = (1 - sqrt(mu) psi) / (1 + sqrt(mu) psi),
/// alpha = (psi - eta sqrt(mu)) / (1 - sqrt(mu) psi) * psi.
/// Rejects sqrt(mu) psi >= 1 (vacuous decay).
AgnesScGeneralParams agnes_sc_general_params(const ProblemClass& pc,
                                             double eta, double psi,
                                             double mu_used);

/// Recovers psi from (eta, rho, alpha):
/// psi = sqrt( (2 rho / (1+rho)) alpha + eta (1-rho)/(1+rho) ).
double agnes_sc_param_inverse(double eta, double rho, double alpha);

/// Maximal admissible step size (1-s^2)/(L(1+s^2)); requires sigma < 1.
NagConvexParams nag_convex_params(const ProblemClass& pc);

/// Same eta; rho = (1 - sqrt(mu eta)) / (1 + sqrt(mu eta)).
NagStronglyConvexParams nag_strongly_convex_params(const ProblemClass& pc);

/// eta = 1/(L(1+s^2)), n0 = 1 + s^2.
SgdParams sgd_params(const ProblemClass& pc);

enum class Theorem {
  nag_convex,             // O(1/n^2) for sigma < 1
  nag_strongly_convex,    // geometric, sigma < 1
  agnes_convex,           // O(1/n^2) for any sigma
  agnes_strongly_convex,  // geometric, any sigma
  gd_convex,              // O(1/n)
  gd_pl,                  // geometric under gradient dominance
  non_convex              // bound on the running-min squared gradient
};

/// Expectations at n = 0 that the bounds multiply.
struct Anchors {
  double f_gap0 = 0.0;   // E[f(x0) - inf f]
  double dist_sq0 = 0.0; // E[||x0 - x*||^2]
  double v0_sq = 0.0;    // ||v0||^2 (non-convex bound only)
};

/// Constant-rho parameters required by the non-convex bound.
struct NonConvexParams {
  double eta;
  double alpha;
  double rho;
};

/// Theoretical upper-bound sequence b[0..n_max] for the requested guarantee,
/// evaluated with the theorem's own optimal parameters derived from `pc`.
/// The non-convex bound needs explicit (eta, alpha, rho). Entries that carry
/// no information at n = 0 (the NAG convex bound) are +infinity there.
std::vector<double> bound_curve(Theorem theorem, const ProblemClass& pc,
                                const Anchors& anchors, long n_max,
                                std::optional<NonConvexParams> ncp = {});

/// Simplified closing constant of the convex guarantee with equality
/// parameters: bound = 2 L (1+2s^2)(3+5s^2) dist_sq0 / n^2.
double agnes_convex_closing_constant(const ProblemClass& pc);

/// Smallest n with bound(n) < eps, or -1 when the curve never crosses within
/// the supplied range.
long iterations_to_epsilon(const std::vector<double>& bound, double eps);

}  // namespace agneslab::params
