#include <cmath>
#include <vector>

#include "agneslab/errors.hpp"
#include "agneslab/params.hpp"
#include "agneslab/rng.hpp"
#include "doctest.h"

using agneslab::AdmissibilityError;
using agneslab::ContractViolation;
using agneslab::NoiseTooLargeError;
using agneslab::RngStream;
using namespace agneslab::params;

namespace {

ProblemClass pc_of(double L, double sigma) {
  ProblemClass pc;
  pc.L = L;
  pc.sigma = sigma;
  return pc;
}

ProblemClass pc_of(double L, double mu, double sigma) {
  ProblemClass pc = pc_of(L, sigma);
  pc.mu = mu;
  return pc;
}

}  // namespace

TEST_CASE("convex momentum parameters with equality choices") {
  const auto p1 = agnes_convex_params(pc_of(1.0, 1.0));
  CHECK(p1.eta == doctest::Approx(0.5));
  CHECK(p1.alpha == doctest::Approx(1.0 / 6.0));
  CHECK(p1.n0 == doctest::Approx(6.0));
  CHECK(p1.schedule.at(0) == doctest::Approx(2.0 / 3.0));

  const auto p2 = agnes_convex_params(pc_of(12.0, 0.0));
  CHECK(p2.eta == doctest::Approx(1.0 / 12.0));
  CHECK(p2.alpha == doctest::Approx(1.0 / 12.0));  // alpha = eta at sigma = 0
  CHECK(p2.n0 == doctest::Approx(2.0));

  const auto p3 = agnes_convex_params(pc_of(12.0, 50.0));
  CHECK(p3.eta == doctest::Approx(1.0 / (12.0 * 2501.0)));
  CHECK(p3.alpha == doctest::Approx(p3.eta / 5001.0));
  CHECK(p3.n0 == doctest::Approx(10002.0));
}

TEST_CASE("strongly convex momentum parameters") {
  const auto p1 = agnes_strongly_convex_params(pc_of(4.0, 1.0, 0.0));
  CHECK(p1.eta == doctest::Approx(0.25));
  CHECK(p1.rho == doctest::Approx(1.0 / 3.0));
  CHECK(p1.alpha == doctest::Approx(0.25));

  const auto p2 = agnes_strongly_convex_params(pc_of(1.0, 1.0, 1.0));
  CHECK(p2.eta == doctest::Approx(0.5));
  CHECK(p2.rho == doctest::Approx(1.0 / 3.0));
  CHECK(p2.alpha == 0.0);

  const auto p3 = agnes_strongly_convex_params(pc_of(500.0, 1.0, 10.0));
  CHECK(p3.eta == doctest::Approx(1.0 / 50500.0));
  const double sl = std::sqrt(500.0) * 101.0;
  CHECK(p3.rho == doctest::Approx((sl - 1.0) / (sl + 1.0)));
  const double gap = 1.0 - std::sqrt(1.0 / 500.0);
  CHECK(p3.alpha == doctest::Approx(gap / (gap + 100.0) * p3.eta));

  // Singular corner: mu = L, sigma = 0 resolves to alpha = eta.
  const auto p4 = agnes_strongly_convex_params(pc_of(2.0, 2.0, 0.0));
  CHECK(p4.alpha == p4.eta);

  CHECK_THROWS_AS(agnes_strongly_convex_params(pc_of(1.0, 0.5)),
                  ContractViolation);
}

TEST_CASE("general strongly convex family") {
  // psi = eta sqrt(mu) turns the momentum off: plain gradient descent.
  const auto gd = agnes_sc_general_params(pc_of(1.0, 1.0, 0.0), 0.5, 0.5, 1.0);
  CHECK(gd.alpha == doctest::Approx(0.0));
  CHECK(gd.rho == doctest::Approx(1.0 / 3.0));
  CHECK(gd.decay == doctest::Approx(0.5));

  // Degenerate corner sqrt(mu) psi = 1 is rejected.
  CHECK_THROWS_AS(agnes_sc_general_params(pc_of(1.0, 1.0, 0.0), 1.0, 1.0, 1.0),
                  AdmissibilityError);

  CHECK_THROWS_AS(agnes_sc_general_params(pc_of(1.0, 1.0, 0.0), 2.0, 0.5, 1.0),
                  AdmissibilityError);
  CHECK_THROWS_AS(agnes_sc_general_params(pc_of(1.0, 1.0, 1.0), 0.5, 0.6, 1.0),
                  AdmissibilityError);
  CHECK_THROWS_AS(agnes_sc_general_params(pc_of(1.0, 1.0, 0.0), 0.5, 0.5, 2.0),
                  AdmissibilityError);
}

TEST_CASE("psi recovery inverts the parameter map") {
  CHECK(agnes_sc_param_inverse(0.5, 1.0 / 3.0, 0.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(agnes_sc_param_inverse(0.5, 1.5, 0.0), ContractViolation);
  CHECK_THROWS_AS(agnes_sc_param_inverse(0.1, 0.5, -1.0), AdmissibilityError);

  // Round trip over random admissible triples.
  RngStream rng(41);
  for (int i = 0; i < 1000; ++i) {
    const double L = 1.0 + 99.0 * rng.next_uniform();
    const double mu = L * (0.01 + 0.98 * rng.next_uniform());
    const double sigma = 3.0 * rng.next_uniform();
    ProblemClass pc = pc_of(L, mu, sigma);
    const double eta_max = 1.0 / (L * (1.0 + sigma * sigma));
    const double eta = eta_max * (0.1 + 0.9 * rng.next_uniform());
    const double psi_max = std::sqrt(eta / (1.0 + sigma * sigma));
    const double psi = psi_max * (0.05 + 0.95 * rng.next_uniform());
    const auto p = agnes_sc_general_params(pc, eta, psi, mu);
    const double psi_back = agnes_sc_param_inverse(eta, p.rho, p.alpha);
    REQUIRE(std::abs(psi_back - psi) <= 1e-12 * psi);
    // The momentum value determines sqrt(mu) psi through (1-z)/(1+z).
    REQUIRE(std::sqrt(mu) * psi ==
            doctest::Approx((1.0 - p.rho) / (1.0 + p.rho)).epsilon(1e-12));
  }
}

TEST_CASE("nag parameters require sigma < 1") {
  const auto p0 = nag_convex_params(pc_of(1.0, 0.0));
  CHECK(p0.eta == doctest::Approx(1.0));
  CHECK(p0.schedule.at(1) == doctest::Approx(0.25));

  const auto p1 = nag_convex_params(pc_of(1.0, 0.5));
  CHECK(p1.eta == doctest::Approx(0.6));

  CHECK_THROWS_AS(nag_convex_params(pc_of(1.0, 1.0)), NoiseTooLargeError);
  CHECK_THROWS_AS(nag_strongly_convex_params(pc_of(1.0, 1.0, 2.0)),
                  NoiseTooLargeError);

  const auto p2 = nag_strongly_convex_params(pc_of(4.0, 1.0, 0.0));
  CHECK(p2.eta == doctest::Approx(0.25));
  CHECK(p2.rho == doctest::Approx((1.0 - 0.5) / (1.0 + 0.5)));
  CHECK_THROWS_AS(nag_strongly_convex_params(pc_of(4.0, 0.5)), ContractViolation);
}

TEST_CASE("gradient descent parameters") {
  const auto p = sgd_params(pc_of(2.0, 1.0));
  CHECK(p.eta == doctest::Approx(0.25));
  CHECK(p.n0 == doctest::Approx(2.0));
  CHECK(sgd_params(pc_of(5.0, 0.0)).eta == doctest::Approx(0.2));
  // Geometric factor under gradient dominance: 1 - mu_pl * eta.
  CHECK(1.0 - 2.0 * 0.25 == doctest::Approx(0.5));
}

TEST_CASE("derived parameters satisfy their own admissibility conditions") {
  RngStream rng(42);
  for (int i = 0; i < 200; ++i) {
    const double L = 0.5 + 100.0 * rng.next_uniform();
    const double sigma = 60.0 * rng.next_uniform();
    const double s2 = sigma * sigma;
    {
      const auto p = agnes_convex_params(pc_of(L, sigma));
      REQUIRE(p.eta <= 1.0 / (L * (1.0 + s2)) * (1.0 + 1e-12));
      REQUIRE(p.alpha <= p.eta / (1.0 + 2.0 * s2) * (1.0 + 1e-12));
      REQUIRE(p.n0 >= 2.0 * p.eta / p.alpha * (1.0 - 1e-12));
    }
    {
      const double mu = L * (0.01 + 0.98 * rng.next_uniform());
      const auto p = agnes_strongly_convex_params(pc_of(L, mu, sigma));
      REQUIRE(p.eta == doctest::Approx(1.0 / (L * (1.0 + s2))));
      REQUIRE(p.rho > 0.0);
      REQUIRE(p.rho < 1.0);
      // The optimal choice sits inside the psi family.
      const double psi = agnes_sc_param_inverse(p.eta, p.rho, p.alpha);
      REQUIRE(psi <= std::sqrt(p.eta / (1.0 + s2)) * (1.0 + 1e-9));
      REQUIRE(psi > 0.0);
    }
  }
}

TEST_CASE("increasing noise strictly shrinks step size and decay gap") {
  double last_eta = 1e300, last_gap = 1e300;
  for (double sigma : {0.0, 0.5, 1.0, 2.0, 10.0, 50.0}) {
    const auto p = agnes_strongly_convex_params(pc_of(500.0, 1.0, sigma));
    const double gap = std::sqrt(1.0 / 500.0) / (1.0 + sigma * sigma);
    REQUIRE(p.eta < last_eta);
    REQUIRE(gap < last_gap);
    last_eta = p.eta;
    last_gap = gap;
  }
}

TEST_CASE("bound curves evaluate their displayed right-hand sides") {
  Anchors a;
  a.f_gap0 = 1.0;
  a.dist_sq0 = 1.0;

  // Strongly convex prefactor at n = 0 is twice the initial gap.
  const auto sc =
      bound_curve(Theorem::agnes_strongly_convex, pc_of(4.0, 1.0, 0.5), a, 3);
  CHECK(sc[0] == doctest::Approx(2.0));
  const double rate = 1.0 - std::sqrt(0.25) / 1.25;
  CHECK(sc[2] == doctest::Approx(2.0 * rate * rate));

  // Gradient-descent convex bound: L dist / (2 (n + 1 + sigma^2)).
  const auto gd = bound_curve(Theorem::gd_convex, pc_of(2.0, 0.0), a, 2);
  CHECK(gd[0] == doctest::Approx(1.0));

  // Convex momentum bound carries both anchors.
  {
    const ProblemClass pc = pc_of(12.0, 10.0);
    const auto p = agnes_convex_params(pc);
    const auto b = bound_curve(Theorem::agnes_convex, pc, a, 2);
    const double expected =
        (2.0 * p.alpha * p.n0 * p.n0 * a.f_gap0 + 2.0 * a.dist_sq0) /
        (p.alpha * (1.0 + p.n0) * (1.0 + p.n0));
    CHECK(b[1] == doctest::Approx(expected));
  }

  // sigma < 1 momentum bound is empty at n = 0 and 2 dist/(eta n(n+2)) after.
  const auto nag = bound_curve(Theorem::nag_convex, pc_of(1.0, 0.5), a, 2);
  CHECK(std::isinf(nag[0]));
  CHECK(nag[1] == doctest::Approx(2.0 / (0.6 * 3.0)));

  // Geometric decay under gradient dominance.
  ProblemClass pl = pc_of(4.0, 0.0);
  pl.mu_pl = 2.0;
  const auto gpl = bound_curve(Theorem::gd_pl, pl, a, 2);
  CHECK(gpl[1] == doctest::Approx(0.5));

  // Non-convex running-min bound.
  NonConvexParams ncp{0.1, 0.05, 0.9};
  const auto g = bound_curve(Theorem::non_convex, pc_of(1.0, 0.0), a, 9, ncp);
  CHECK(g[9] == doctest::Approx(4.0));
  CHECK_THROWS_AS(bound_curve(Theorem::non_convex, pc_of(1.0, 0.0), a, 9),
                  ContractViolation);
  // alpha >= eta/(1+sigma^2) voids the guarantee.
  NonConvexParams bad{0.1, 0.2, 0.9};
  CHECK_THROWS_AS(bound_curve(Theorem::non_convex, pc_of(1.0, 0.0), a, 9, bad),
                  AdmissibilityError);
  // (L alpha + 1) rho^2 must stay below one.
  NonConvexParams bad2{0.1, 0.05, 0.999};
  CHECK_THROWS_AS(
      bound_curve(Theorem::non_convex, pc_of(100.0, 0.0), a, 9, bad2),
      AdmissibilityError);
}

TEST_CASE("closing constant of the convex guarantee") {
  CHECK(agnes_convex_closing_constant(pc_of(1.0, 0.0)) == doctest::Approx(6.0));
  CHECK(agnes_convex_closing_constant(pc_of(2.0, 1.0)) ==
        doctest::Approx(2.0 * 2.0 * 3.0 * 8.0));
}

TEST_CASE("iteration counts from bound curves order agnes before sgd") {
  // L = 500, mu = 1, sigma = 10, eps = 1e-3.
  ProblemClass pc = pc_of(500.0, 1.0, 10.0);
  pc.mu_pl = 1.0;
  Anchors a;
  a.f_gap0 = 2.505;
  a.dist_sq0 = 0.02;
  const long horizon = 2000000;
  const auto agnes = bound_curve(Theorem::agnes_strongly_convex, pc, a, horizon);
  const auto sgd = bound_curve(Theorem::gd_pl, pc, a, horizon);
  const long na = iterations_to_epsilon(agnes, 1e-3);
  const long ns = iterations_to_epsilon(sgd, 1e-3);
  REQUIRE(na > 0);
  REQUIRE(ns > 0);
  CHECK(na < ns);
}

TEST_CASE("problem class validation") {
  CHECK_THROWS_AS(pc_of(0.0, 0.0).validate(), ContractViolation);
  CHECK_THROWS_AS(pc_of(1.0, 2.0, 0.0).validate(), ContractViolation);
  CHECK_THROWS_AS(pc_of(1.0, -1.0).validate(), ContractViolation);
  CHECK_NOTHROW(pc_of(1.0, 1.0, 50.0).validate());
}
