#include "agneslab/noise.hpp"

#include <cmath>
#include <string>

#include "agneslab/errors.hpp"

namespace agneslab::noise {

namespace {

constexpr double kDegenerateProjection = 1e-12;

void require_sigma(double sigma) {
  if (!(sigma >= 0.0)) throw ContractViolation("noise: sigma must be >= 0");
}

Vec unit_or_throw(Vec v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw ContractViolation("noise: direction must be nonzero");
  v /= n;
  return v;
}

}  // namespace

NoiseModel NoiseModel::exact() { return NoiseModel(Kind::exact); }

NoiseModel NoiseModel::collinear(double sigma) {
  require_sigma(sigma);
  NoiseModel m(Kind::collinear);
  m.sigma_ = sigma;
  return m;
}

NoiseModel NoiseModel::isotropic(double sigma) {
  require_sigma(sigma);
  NoiseModel m(Kind::isotropic);
  m.sigma_ = sigma;
  return m;
}

NoiseModel NoiseModel::orthogonal(double sigma) {
  require_sigma(sigma);
  NoiseModel m(Kind::orthogonal);
  m.sigma_ = sigma;
  return m;
}

NoiseModel NoiseModel::fixed_direction(double sigma, Vec v) {
  require_sigma(sigma);
  NoiseModel m(Kind::fixed_direction);
  m.sigma_ = sigma;
  m.direction_ = unit_or_throw(std::move(v));
  return m;
}

NoiseModel NoiseModel::bernoulli_direction(double sigma, Vec v) {
  require_sigma(sigma);
  NoiseModel m(Kind::bernoulli_direction);
  m.sigma_ = sigma;
  m.direction_ = unit_or_throw(std::move(v));
  return m;
}

NoiseModel NoiseModel::batched(NoiseModel inner, int n_b) {
  if (n_b < 1) throw ContractViolation("noise: batch size must be >= 1");
  NoiseModel m(Kind::batched);
  m.sigma_ = inner.sigma_;
  m.batch_ = n_b;
  m.inner_ = std::make_shared<const NoiseModel>(std::move(inner));
  return m;
}

const NoiseModel& NoiseModel::inner() const {
  if (!inner_) throw ContractViolation("noise: only batched models have an inner model");
  return *inner_;
}

double NoiseModel::effective_sigma_sq() const {
  if (kind_ == Kind::batched) {
    return inner_->effective_sigma_sq() / static_cast<double>(batch_);
  }
  if (kind_ == Kind::exact) return 0.0;
  return sigma_ * sigma_;
}

void NoiseModel::sample(const Vec& gradient, RngStream& rng, Vec& out) const {
  const Eigen::Index d = gradient.size();
  switch (kind_) {
    case Kind::exact:
      out = gradient;
      return;

    case Kind::collinear:
      out = (1.0 + sigma_ * rng.next_normal()) * gradient;
      return;

    case Kind::isotropic: {
      out.resize(d);
      rng.fill_normal(out);
      const double scale = sigma_ * gradient.norm() / std::sqrt(static_cast<double>(d));
      out = gradient + scale * out;
      return;
    }

    case Kind::orthogonal: {
      if (d < 2) {
        throw UnsupportedConfiguration(
            "orthogonal noise needs dimension >= 2");
      }
      const double gnorm = gradient.norm();
      Vec w(d);
      for (;;) {
        rng.fill_normal(w);
        if (gnorm > 0.0) w -= (w.dot(gradient) / (gnorm * gnorm)) * gradient;
        const double pnorm = w.norm();
        if (pnorm > kDegenerateProjection) {
          w /= pnorm;
          break;
        }
      }
      const double n = rng.next_normal();
      out = gradient + (sigma_ * gnorm * n) * w;
      return;
    }

    case Kind::fixed_direction: {
      const double n = rng.next_normal();
      out = gradient + (sigma_ * gradient.norm() * n) * direction_;
      return;
    }

    case Kind::bernoulli_direction: {
      // N is +-1 with probability p each, 0 otherwise; the jump magnitude
      // stays of order one near critical points while p vanishes there.
      const double g2 = sigma_ * sigma_ * gradient.squaredNorm();
      const double p = 0.5 * g2 / (1.0 + g2);
      const double u = rng.next_uniform();
      const double n = u < p ? 1.0 : (u < 2.0 * p ? -1.0 : 0.0);
      out = gradient + (std::sqrt(1.0 + g2) * n) * direction_;
      return;
    }

    case Kind::batched: {
      Vec draw(d);
      inner_->sample(gradient, rng, out);
      for (int j = 1; j < batch_; ++j) {
        inner_->sample(gradient, rng, draw);
        out += draw;
      }
      out /= static_cast<double>(batch_);
      return;
    }
  }
}

Vec NoiseModel::sample(const Vec& gradient, RngStream& rng) const {
  Vec out;
  sample(gradient, rng, out);
  return out;
}

Moments empirical_moments(const NoiseModel& model, const Vec& gradient,
                          long draws, RngStream& rng) {
  if (draws < 2) throw ContractViolation("empirical_moments: draws must be >= 2");
  Vec sum = Vec::Zero(gradient.size());
  double dev = 0.0;
  Vec g;
  for (long i = 0; i < draws; ++i) {
    model.sample(gradient, rng, g);
    sum += g;
    dev += (g - gradient).squaredNorm();
  }
  Moments m;
  m.mean = sum / static_cast<double>(draws);
  m.second_central = dev / static_cast<double>(draws);
  return m;
}

}  // namespace agneslab::noise
