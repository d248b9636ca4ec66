#pragma once

#include <Eigen/Core>

#include "agneslab/rng.hpp"

namespace agneslab::overparam {

using Matrix = Eigen::MatrixXd;

/// Parameter-linear least-squares model h(w, x) = w^T phi(x) with squared
/// loss; the setting in which per-sample gradient noise is provably
/// risk-proportional. Row i of `features` is phi(x_i).
struct RandomFeatureModel {
  Matrix features;  // N x m
  Matrix labels;    // N x k
  Matrix weights;   // m x k

  long samples() const { return features.rows(); }
  long width() const { return features.cols(); }
  long outputs() const { return labels.cols(); }

  /// C = max_i ||phi(x_i)||, the tightest constant satisfying the
  /// gradient-norm hypothesis (growth exponent p = 0 in this model class).
  double feature_norm_bound() const;

  void validate() const;

  /// Standard normal features, labels, and weights.
  static RandomFeatureModel random(long n_samples, long width, long outputs,
                                   RngStream& rng);
};

/// R(w) = (1/N) sum_i ||w^T phi(x_i) - y_i||^2
double risk(const RandomFeatureModel& model);

/// grad of l_i(w) = ||w^T phi(x_i) - y_i||^2, arranged m x k; zero-based i.
Matrix per_sample_grad(const RandomFeatureModel& model, long i);

/// Mean of the per-sample gradients.
Matrix full_grad(const RandomFeatureModel& model);

/// (1/N) sum_i ||grad l_i - grad R||^2, the exact population second central
/// moment of the single-sample estimator.
double noise_second_moment(const RandomFeatureModel& model);

struct LemmaBound {
  double lhs = 0.0;  // noise second moment
  double rhs = 0.0;  // 4 C^2 (1 + ||w||)^{2p} R(w), p = 0
  bool holds = false;
};

/// Checks the risk-proportional noise bound on the given model.
LemmaBound check_lemma_bound(const RandomFeatureModel& model);

/// Average of n_b per-sample gradients drawn uniformly with replacement.
Matrix minibatch_oracle(const RandomFeatureModel& model, int n_b,
                        RngStream& rng);

struct VarianceScan {
  double empirical = 0.0;  // Monte-Carlo estimate of E||g - grad R||^2
  double predicted = 0.0;  // noise_second_moment / n_b
  double sem = 0.0;
  bool within = false;     // |empirical - predicted| <= 3 sem
};

/// Estimates the minibatch estimator variance over `draws` batches and
/// checks the 1/n_b scaling against the exact population moment.
VarianceScan minibatch_variance_scan(const RandomFeatureModel& model, int n_b,
                                     long draws, RngStream& rng);

/// Minimum-norm exact least-squares fit; with width > samples the residual
/// vanishes and so does the estimator noise.
Matrix interpolating_weights(const RandomFeatureModel& model);

}  // namespace agneslab::overparam
