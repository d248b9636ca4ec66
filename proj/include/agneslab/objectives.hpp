#pragma once

#include <optional>
#include <string>
#include <vector>

#include "agneslab/types.hpp"

namespace agneslab::objectives {

/// Analytic constants of a test objective. `mu` is the strong-convexity
/// modulus, `mu_pl` the gradient-dominance (PL) constant; either may be
/// absent. `minimizer` is one global minimizer when one exists.
struct Constants {
  double L = 0.0;
  std::optional<double> mu;
  std::optional<double> mu_pl;
  double inf_f = 0.0;
  std::optional<Vec> minimizer;
};

/// Anything the optimizers can run against.
class Differentiable {
 public:
  virtual ~Differentiable() = default;
  virtual int dimension() const = 0;
  virtual double eval(const Vec& x) const = 0;
  virtual void grad(const Vec& x, Vec& out) const = 0;

  Vec grad(const Vec& x) const {
    Vec g(dimension());
    grad(x, g);
    return g;
  }
};

/// The built-in test objectives with exact gradients and known constants.
/// Immutable value type; safe to share across threads.
class Objective final : public Differentiable {
 public:
  enum class Kind {
    power_hinge,       // |x|^d inside the unit interval, linear outside
    quadratic2d,       // (mu/2) x1^2 + (L/2) x2^2
    quadratic_nd,      // (1/2) sum_i lambda_i x_i^2
    softplus_mirror,   // log(1 + exp(-x)); inf 0, no minimizer
    sine_valley        // (y - sin x)^2; PL but non-convex
  };

  static Objective power_hinge(int d);
  static Objective quadratic2d(double mu, double L);
  static Objective quadratic_nd(std::vector<double> eigenvalues);
  static Objective softplus_mirror();
  static Objective sine_valley();

  Kind kind() const { return kind_; }
  int dimension() const override { return dim_; }
  int hinge_degree() const { return hinge_d_; }

  double eval(const Vec& x) const override;
  void grad(const Vec& x, Vec& out) const override;
  using Differentiable::grad;

  Constants constants() const;

  std::string name() const;

 private:
  Objective(Kind kind, int dim) : kind_(kind), dim_(dim) {}

  Kind kind_;
  int dim_;
  int hinge_d_ = 0;
  double mu_ = 0.0;
  double L_ = 0.0;
  std::vector<double> eigs_;
};

// Smoothness constant used for the sine-valley objective. No closed form is
// used; this is the maximum Hessian operator norm over a 2001x2001 grid on
// [-10,10]^2 plus a 10% margin, frozen here and cross-checked by the test
// suite.
inline constexpr double kSineValleySmoothness = 24.1999903505593;

}  // namespace agneslab::objectives
