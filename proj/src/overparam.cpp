#include "agneslab/overparam.hpp"

#include <Eigen/QR>
#include <cmath>

#include "agneslab/errors.hpp"

namespace agneslab::overparam {

double RandomFeatureModel::feature_norm_bound() const {
  return features.rowwise().norm().maxCoeff();
}

void RandomFeatureModel::validate() const {
  if (features.rows() < 1 || features.cols() < 1) {
    throw ContractViolation("random feature model: empty feature matrix");
  }
  if (labels.rows() != features.rows()) {
    throw ContractViolation("random feature model: labels/features row mismatch");
  }
  if (weights.rows() != features.cols() || weights.cols() != labels.cols()) {
    throw ContractViolation("random feature model: weight shape mismatch");
  }
}

RandomFeatureModel RandomFeatureModel::random(long n_samples, long width,
                                              long outputs, RngStream& rng) {
  RandomFeatureModel model;
  auto fill = [&rng](Matrix& m, long r, long c) {
    m.resize(r, c);
    for (long i = 0; i < r; ++i) {
      for (long j = 0; j < c; ++j) m(i, j) = rng.next_normal();
    }
  };
  fill(model.features, n_samples, width);
  fill(model.labels, n_samples, outputs);
  fill(model.weights, width, outputs);
  return model;
}

double risk(const RandomFeatureModel& model) {
  model.validate();
  return (model.features * model.weights - model.labels).squaredNorm() /
         static_cast<double>(model.samples());
}

Matrix per_sample_grad(const RandomFeatureModel& model, long i) {
  model.validate();
  if (i < 0 || i >= model.samples()) {
    throw ContractViolation("per_sample_grad: sample index out of range");
  }
  // 2 phi(x_i) (h - y_i)^T, an m x k outer product.
  const Eigen::RowVectorXd phi = model.features.row(i);
  const Eigen::RowVectorXd residual =
      phi * model.weights - model.labels.row(i);
  return 2.0 * phi.transpose() * residual;
}

Matrix full_grad(const RandomFeatureModel& model) {
  model.validate();
  const Matrix residual = model.features * model.weights - model.labels;
  return 2.0 * model.features.transpose() * residual /
         static_cast<double>(model.samples());
}

double noise_second_moment(const RandomFeatureModel& model) {
  const Matrix mean = full_grad(model);
  double acc = 0.0;
  for (long i = 0; i < model.samples(); ++i) {
    acc += (per_sample_grad(model, i) - mean).squaredNorm();
  }
  return acc / static_cast<double>(model.samples());
}

LemmaBound check_lemma_bound(const RandomFeatureModel& model) {
  LemmaBound out;
  out.lhs = noise_second_moment(model);
  const double c = model.feature_norm_bound();
  out.rhs = 4.0 * c * c * risk(model);  // (1 + ||w||)^{2p} = 1 at p = 0
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-12);
  return out;
}

Matrix minibatch_oracle(const RandomFeatureModel& model, int n_b,
                        RngStream& rng) {
  model.validate();
  if (n_b < 1) throw ContractViolation("minibatch_oracle: n_b must be >= 1");
  const auto n = static_cast<std::uint64_t>(model.samples());
  Matrix acc = Matrix::Zero(model.width(), model.outputs());
  for (int j = 0; j < n_b; ++j) {
    acc += per_sample_grad(model, static_cast<long>(rng.next_u64() % n));
  }
  return acc / static_cast<double>(n_b);
}

VarianceScan minibatch_variance_scan(const RandomFeatureModel& model, int n_b,
                                     long draws, RngStream& rng) {
  if (draws < 2) throw ContractViolation("minibatch_variance_scan: draws must be >= 2");
  const Matrix mean = full_grad(model);
  double sum = 0.0, sum_sq = 0.0;
  for (long d = 0; d < draws; ++d) {
    const double dev = (minibatch_oracle(model, n_b, rng) - mean).squaredNorm();
    sum += dev;
    sum_sq += dev * dev;
  }
  const double n = static_cast<double>(draws);
  VarianceScan scan;
  scan.empirical = sum / n;
  scan.predicted = noise_second_moment(model) / static_cast<double>(n_b);
  const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
  scan.sem = std::sqrt(var / n);
  scan.within = std::abs(scan.empirical - scan.predicted) <= 3.0 * scan.sem;
  return scan;
}

Matrix interpolating_weights(const RandomFeatureModel& model) {
  model.validate();
  return model.features.completeOrthogonalDecomposition().solve(model.labels);
}

}  // namespace agneslab::overparam
