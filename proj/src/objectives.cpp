#include "agneslab/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "agneslab/errors.hpp"

namespace agneslab::objectives {

namespace {

void check_dimension(const Objective& obj, const Vec& x) {
  if (x.size() != obj.dimension()) {
    throw ContractViolation("objective: point has dimension " +
                            std::to_string(x.size()) + ", expected " +
                            std::to_string(obj.dimension()));
  }
}

double stable_softplus_of_negative(double x) {
  // log(1 + exp(-x)) without overflow on either tail.
  if (x >= 0.0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

}  // namespace

Objective Objective::power_hinge(int d) {
  if (d < 2) throw ContractViolation("power_hinge: requires d >= 2");
  Objective obj(Kind::power_hinge, 1);
  obj.hinge_d_ = d;
  return obj;
}

Objective Objective::quadratic2d(double mu, double L) {
  if (!(mu > 0.0) || !(mu <= L)) {
    throw ContractViolation("quadratic2d: requires 0 < mu <= L");
  }
  Objective obj(Kind::quadratic2d, 2);
  obj.mu_ = mu;
  obj.L_ = L;
  return obj;
}

Objective Objective::quadratic_nd(std::vector<double> eigenvalues) {
  if (eigenvalues.empty()) {
    throw ContractViolation("quadratic_nd: needs at least one eigenvalue");
  }
  for (double e : eigenvalues) {
    if (!(e > 0.0)) {
      throw ContractViolation("quadratic_nd: eigenvalues must be positive");
    }
  }
  Objective obj(Kind::quadratic_nd, static_cast<int>(eigenvalues.size()));
  obj.eigs_ = std::move(eigenvalues);
  return obj;
}

Objective Objective::softplus_mirror() {
  return Objective(Kind::softplus_mirror, 1);
}

Objective Objective::sine_valley() { return Objective(Kind::sine_valley, 2); }

double Objective::eval(const Vec& x) const {
  check_dimension(*this, x);
  switch (kind_) {
    case Kind::power_hinge: {
      const double a = std::abs(x[0]);
      const double d = static_cast<double>(hinge_d_);
      return a < 1.0 ? std::pow(a, d) : 1.0 + d * (a - 1.0);
    }
    case Kind::quadratic2d:
      return 0.5 * (mu_ * x[0] * x[0] + L_ * x[1] * x[1]);
    case Kind::quadratic_nd: {
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) s += eigs_[i] * x[i] * x[i];
      return 0.5 * s;
    }
    case Kind::softplus_mirror:
      return stable_softplus_of_negative(x[0]);
    case Kind::sine_valley: {
      const double r = x[1] - std::sin(x[0]);
      return r * r;
    }
  }
  return 0.0;  // unreachable
}

void Objective::grad(const Vec& x, Vec& out) const {
  check_dimension(*this, x);
  out.resize(dim_);
  switch (kind_) {
    case Kind::power_hinge: {
      const double a = std::abs(x[0]);
      const double s = x[0] > 0.0 ? 1.0 : (x[0] < 0.0 ? -1.0 : 0.0);
      const double d = static_cast<double>(hinge_d_);
      out[0] = a < 1.0 ? d * s * std::pow(a, d - 1.0) : d * s;
      return;
    }
    case Kind::quadratic2d:
      out[0] = mu_ * x[0];
      out[1] = L_ * x[1];
      return;
    case Kind::quadratic_nd:
      for (int i = 0; i < dim_; ++i) out[i] = eigs_[i] * x[i];
      return;
    case Kind::softplus_mirror:
      // -sigmoid(-x), evaluated on the stable side.
      out[0] = x[0] >= 0.0 ? -std::exp(-x[0]) / (1.0 + std::exp(-x[0]))
                           : -1.0 / (1.0 + std::exp(x[0]));
      return;
    case Kind::sine_valley: {
      const double r = x[1] - std::sin(x[0]);
      out[0] = -2.0 * r * std::cos(x[0]);
      out[1] = 2.0 * r;
      return;
    }
  }
}

Constants Objective::constants() const {
  Constants c;
  switch (kind_) {
    case Kind::power_hinge:
      // Second derivative is d(d-1)|x|^(d-2) inside, 0 outside. `mu` stays
      // absent: the hinge is strongly convex only for d = 2 and only on the
      // unit ball.
      c.L = static_cast<double>(hinge_d_) * (hinge_d_ - 1.0);
      c.inf_f = 0.0;
      c.minimizer = Vec::Zero(1);
      break;
    case Kind::quadratic2d:
      c.L = L_;
      c.mu = mu_;
      c.mu_pl = mu_;
      c.inf_f = 0.0;
      c.minimizer = Vec::Zero(2);
      break;
    case Kind::quadratic_nd:
      c.L = *std::max_element(eigs_.begin(), eigs_.end());
      c.mu = *std::min_element(eigs_.begin(), eigs_.end());
      c.mu_pl = c.mu;
      c.inf_f = 0.0;
      c.minimizer = Vec::Zero(dim_);
      break;
    case Kind::softplus_mirror:
      c.L = 0.25;  // max of the sigmoid derivative
      c.inf_f = 0.0;
      break;
    case Kind::sine_valley:
      c.L = kSineValleySmoothness;
      c.mu_pl = 2.0;  // |d_y f|^2 = 4 f
      c.inf_f = 0.0;
      c.minimizer = Vec::Zero(2);  // one point of the minimizing curve y = sin x
      break;
  }
  return c;
}

std::string Objective::name() const {
  switch (kind_) {
    case Kind::power_hinge:
      return "power_hinge(" + std::to_string(hinge_d_) + ")";
    case Kind::quadratic2d:
      return "quadratic2d";
    case Kind::quadratic_nd:
      return "quadratic_nd";
    case Kind::softplus_mirror:
      return "softplus_mirror";
    case Kind::sine_valley:
      return "sine_valley";
  }
  return "objective";
}

}  // namespace agneslab::objectives
