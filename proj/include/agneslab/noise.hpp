#pragma once

#include <memory>

#include "agneslab/rng.hpp"
#include "agneslab/types.hpp"

namespace agneslab::noise {

/// Unbiased gradient-estimator recipes whose error scales with the gradient
/// magnitude: E||g - grad||^2 <= sigma^2 ||grad||^2. All kinds except
/// `bernoulli_direction` attain the bound with equality by construction;
/// the Bernoulli kind has matching second moment but keeps rare jumps of
/// fixed size near critical points, so it is excluded from the bound-style
/// property tests (see README).
///
/// Immutable value type. Sampling mutates only the caller's RngStream.
class NoiseModel {
 public:
  enum class Kind {
    exact,
    collinear,            // g = (1 + sigma N) grad, scalar N
    isotropic,            // g = grad + sigma ||grad|| N / sqrt(d)
    orthogonal,           // scaled scalar noise in a random direction _|_ grad
    fixed_direction,      // scaled scalar noise along a fixed unit vector
    bernoulli_direction,  // rare +-1 jumps along a fixed unit vector
    batched               // average of n_b independent inner draws
  };

  static NoiseModel exact();
  static NoiseModel collinear(double sigma);
  static NoiseModel isotropic(double sigma);
  static NoiseModel orthogonal(double sigma);
  static NoiseModel fixed_direction(double sigma, Vec v);
  static NoiseModel bernoulli_direction(double sigma, Vec v);
  static NoiseModel batched(NoiseModel inner, int n_b);

  Kind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  int batch_size() const { return batch_; }
  const NoiseModel& inner() const;
  const Vec& direction() const { return direction_; }

  /// sigma^2 of the model as seen by the optimizer; batching divides the
  /// inner intensity by the batch size.
  double effective_sigma_sq() const;

  /// One unbiased draw of the gradient estimate.
  void sample(const Vec& gradient, RngStream& rng, Vec& out) const;
  Vec sample(const Vec& gradient, RngStream& rng) const;

 private:
  explicit NoiseModel(Kind kind) : kind_(kind) {}

  Kind kind_;
  double sigma_ = 0.0;
  Vec direction_;
  int batch_ = 1;
  std::shared_ptr<const NoiseModel> inner_;
};

struct Moments {
  Vec mean;
  double second_central = 0.0;  // mean of ||g - gradient||^2
};

/// Sample moments over `draws` independent draws at a fixed gradient.
Moments empirical_moments(const NoiseModel& model, const Vec& gradient,
                          long draws, RngStream& rng);

}  // namespace agneslab::noise
