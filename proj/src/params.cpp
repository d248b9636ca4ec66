#include "agneslab/params.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "agneslab/errors.hpp"

namespace agneslab::params {

namespace {

double require_mu(const ProblemClass& pc, const char* who) {
  if (!pc.mu) {
    throw ContractViolation(std::string(who) + ": strong-convexity constant absent");
  }
  return *pc.mu;
}

void require_sigma_below_one(const ProblemClass& pc, const char* who) {
  if (!(pc.sigma < 1.0)) {
    throw NoiseTooLargeError(std::string(who) +
                             ": requires sigma < 1; the guarantee is void otherwise");
  }
}

}  // namespace

void ProblemClass::validate() const {
  if (!(L > 0.0)) throw ContractViolation("problem class: L must be > 0");
  if (!(sigma >= 0.0)) throw ContractViolation("problem class: sigma must be >= 0");
  if (mu && !(*mu > 0.0 && *mu <= L)) {
    throw ContractViolation("problem class: requires 0 < mu <= L");
  }
  if (mu_pl && !(*mu_pl > 0.0)) {
    throw ContractViolation("problem class: mu_pl must be > 0");
  }
}

AgnesConvexParams agnes_convex_params(const ProblemClass& pc) {
  pc.validate();
  const double s2 = pc.sigma * pc.sigma;
  AgnesConvexParams p;
  p.eta = 1.0 / (pc.L * (1.0 + s2));
  p.alpha = p.eta / (1.0 + 2.0 * s2);
  p.n0 = 2.0 * (1.0 + 2.0 * s2);
  p.schedule = optim::MomentumSchedule::polynomial(p.n0);
  return p;
}

AgnesStronglyConvexParams agnes_strongly_convex_params(const ProblemClass& pc) {
  pc.validate();
  const double mu = require_mu(pc, "agnes_strongly_convex_params");
  const double s2 = pc.sigma * pc.sigma;
  AgnesStronglyConvexParams p;
  p.eta = 1.0 / (pc.L * (1.0 + s2));
  const double sl = std::sqrt(pc.L) * (1.0 + s2);
  const double sm = std::sqrt(mu);
  p.rho = (sl - sm) / (sl + sm);
  const double gap = 1.0 - std::sqrt(mu / pc.L);
  // mu = L and sigma = 0 leaves alpha as 0/0; the deterministic rule
  // alpha = eta takes precedence there.
  p.alpha = (gap == 0.0 && s2 == 0.0) ? p.eta : gap / (gap + s2) * p.eta;
  return p;
}

AgnesScGeneralParams agnes_sc_general_params(const ProblemClass& pc,
                                             double eta, double psi,
                                             double mu_used) {
  pc.validate();
  const double mu = require_mu(pc, "agnes_sc_general_params");
  const double s2 = pc.sigma * pc.sigma;
  if (!(mu_used > 0.0 && mu_used <= mu)) {
    throw AdmissibilityError("agnes_sc_general_params: requires 0 < mu_used <= mu");
  }
  const double eta_max = 1.0 / (pc.L * (1.0 + s2));
  if (!(eta > 0.0 && eta <= eta_max * (1.0 + 1e-12))) {
    throw AdmissibilityError(
        "agnes_sc_general_params: requires 0 < eta <= 1/(L(1+sigma^2))");
  }
  const double psi_max = std::sqrt(eta / (1.0 + s2));
  if (!(psi > 0.0 && psi <= psi_max * (1.0 + 1e-12))) {
    throw AdmissibilityError(
        "agnes_sc_general_params: requires 0 < psi <= sqrt(eta/(1+sigma^2))");
  }
  const double z = std::sqrt(mu_used) * psi;
  if (!(z < 1.0)) {
    throw AdmissibilityError(
        "agnes_sc_general_params: requires sqrt(mu_used)*psi < 1 (decay would be vacuous)");
  }
  AgnesScGeneralParams p;
  p.rho = (1.0 - z) / (1.0 + z);
  p.alpha = (psi - eta * std::sqrt(mu_used)) / (1.0 - z) * psi;
  p.decay = 1.0 - z;
  return p;
}

double agnes_sc_param_inverse(double eta, double rho, double alpha) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw ContractViolation("agnes_sc_param_inverse: requires 0 < rho < 1");
  }
  const double radicand =
      2.0 * rho / (1.0 + rho) * alpha + eta * (1.0 - rho) / (1.0 + rho);
  if (!(radicand > 0.0)) {
    throw AdmissibilityError(
        "agnes_sc_param_inverse: radicand (2rho alpha + eta(1-rho))/(1+rho) must be positive");
  }
  return std::sqrt(radicand);
}

NagConvexParams nag_convex_params(const ProblemClass& pc) {
  pc.validate();
  require_sigma_below_one(pc, "nag_convex_params");
  const double s2 = pc.sigma * pc.sigma;
  NagConvexParams p;
  p.eta = (1.0 - s2) / (pc.L * (1.0 + s2));
  p.schedule = optim::MomentumSchedule::polynomial(0.0);
  return p;
}

NagStronglyConvexParams nag_strongly_convex_params(const ProblemClass& pc) {
  pc.validate();
  require_sigma_below_one(pc, "nag_strongly_convex_params");
  const double mu = require_mu(pc, "nag_strongly_convex_params");
  const double s2 = pc.sigma * pc.sigma;
  NagStronglyConvexParams p;
  p.eta = (1.0 - s2) / (pc.L * (1.0 + s2));
  const double z = std::sqrt(mu * p.eta);
  p.rho = (1.0 - z) / (1.0 + z);
  return p;
}

SgdParams sgd_params(const ProblemClass& pc) {
  pc.validate();
  const double s2 = pc.sigma * pc.sigma;
  SgdParams p;
  p.eta = 1.0 / (pc.L * (1.0 + s2));
  p.n0 = 1.0 + s2;
  return p;
}

std::vector<double> bound_curve(Theorem theorem, const ProblemClass& pc,
                                const Anchors& anchors, long n_max,
                                std::optional<NonConvexParams> ncp) {
  pc.validate();
  if (n_max < 0) throw ContractViolation("bound_curve: n_max must be >= 0");
  const double s2 = pc.sigma * pc.sigma;
  std::vector<double> b(static_cast<std::size_t>(n_max) + 1);

  switch (theorem) {
    case Theorem::nag_convex: {
      const NagConvexParams p = nag_convex_params(pc);
      b[0] = std::numeric_limits<double>::infinity();
      for (long n = 1; n <= n_max; ++n) {
        b[n] = 2.0 * anchors.dist_sq0 /
               (p.eta * static_cast<double>(n) * static_cast<double>(n + 2));
      }
      return b;
    }
    case Theorem::nag_strongly_convex: {
      const NagStronglyConvexParams p = nag_strongly_convex_params(pc);
      const double mu = *pc.mu;
      const double r = 1.0 - std::sqrt(mu * p.eta);
      double pw = 1.0;
      for (long n = 0; n <= n_max; ++n, pw *= r) b[n] = 2.0 * pw * anchors.f_gap0;
      return b;
    }
    case Theorem::agnes_convex: {
      const AgnesConvexParams p = agnes_convex_params(pc);
      const double num = 2.0 * p.alpha * p.n0 * p.n0 * anchors.f_gap0 +
                         2.0 * anchors.dist_sq0;
      for (long n = 0; n <= n_max; ++n) {
        const double z = static_cast<double>(n) + p.n0;
        b[n] = num / (p.alpha * z * z);
      }
      return b;
    }
    case Theorem::agnes_strongly_convex: {
      const double mu = require_mu(pc, "bound_curve");
      const double r = 1.0 - std::sqrt(mu / pc.L) / (1.0 + s2);
      double pw = 1.0;
      for (long n = 0; n <= n_max; ++n, pw *= r) b[n] = 2.0 * pw * anchors.f_gap0;
      return b;
    }
    case Theorem::gd_convex: {
      for (long n = 0; n <= n_max; ++n) {
        b[n] = pc.L * (1.0 + s2) * anchors.dist_sq0 /
               (2.0 * (static_cast<double>(n) + 1.0 + s2));
      }
      return b;
    }
    case Theorem::gd_pl: {
      if (!pc.mu_pl) throw ContractViolation("bound_curve: gd_pl needs mu_pl");
      const double eta = 1.0 / (pc.L * (1.0 + s2));
      const double r = 1.0 - *pc.mu_pl * eta;
      double pw = 1.0;
      for (long n = 0; n <= n_max; ++n, pw *= r) b[n] = pw * anchors.f_gap0;
      return b;
    }
    case Theorem::non_convex: {
      if (!ncp) {
        throw ContractViolation("bound_curve: non_convex needs (eta, alpha, rho)");
      }
      const double eta = ncp->eta, alpha = ncp->alpha, rho = ncp->rho;
      if (!(eta > 0.0 && eta <= (1.0 + 1e-12) / (pc.L * (1.0 + s2)))) {
        throw AdmissibilityError(
            "non-convex bound: requires 0 < eta <= 1/(L(1+sigma^2))");
      }
      if (!(alpha > 0.0 && alpha < eta / (1.0 + s2))) {
        throw AdmissibilityError(
            "non-convex bound: requires 0 < alpha < eta/(1+sigma^2)");
      }
      if (!(rho > 0.0 && (pc.L * alpha + 1.0) * rho * rho <= 1.0 + 1e-12)) {
        throw AdmissibilityError(
            "non-convex bound: requires rho > 0 and (L*alpha+1)rho^2 <= 1");
      }
      const double eps = eta - alpha * (1.0 + s2);
      const double num =
          2.0 * (anchors.f_gap0 + anchors.v0_sq / (alpha * rho * rho));
      for (long n = 0; n <= n_max; ++n) {
        b[n] = num / (static_cast<double>(n + 1) * eps);
      }
      return b;
    }
  }
  throw ContractViolation("bound_curve: unknown theorem");
}

double agnes_convex_closing_constant(const ProblemClass& pc) {
  pc.validate();
  const double s2 = pc.sigma * pc.sigma;
  return 2.0 * pc.L * (1.0 + 2.0 * s2) * (3.0 + 5.0 * s2);
}

long iterations_to_epsilon(const std::vector<double>& bound, double eps) {
  for (std::size_t n = 0; n < bound.size(); ++n) {
    if (bound[n] < eps) return static_cast<long>(n);
  }
  return -1;
}

}  // namespace agneslab::params
