#include <cmath>

#include "agneslab/errors.hpp"
#include "agneslab/overparam.hpp"
#include "agneslab/rng.hpp"
#include "doctest.h"

using agneslab::ContractViolation;
using agneslab::RngStream;
using namespace agneslab::overparam;

namespace {

RandomFeatureModel tiny_two_sample() {
  // phi_1 = (1,0), phi_2 = (0,1), labels 0, weights (1,1).
  RandomFeatureModel m;
  m.features = Matrix::Identity(2, 2);
  m.labels = Matrix::Zero(2, 1);
  m.weights = Matrix::Ones(2, 1);
  return m;
}

}  // namespace

TEST_CASE("risk and gradients on a one-sample model") {
  RandomFeatureModel m;
  m.features = Matrix(1, 2);
  m.features << 1.0, 0.0;
  m.labels = Matrix::Zero(1, 1);
  m.weights = Matrix(2, 1);
  m.weights << 2.0, 0.0;
  CHECK(risk(m) == doctest::Approx(4.0));
  const Matrix g = per_sample_grad(m, 0);
  CHECK(g(0, 0) == doctest::Approx(4.0));
  CHECK(g(1, 0) == 0.0);
  CHECK(full_grad(m) == g);
  CHECK(noise_second_moment(m) == 0.0);  // one sample has no spread
}

TEST_CASE("full gradient is the mean of per-sample gradients") {
  RngStream rng(3);
  const auto m = RandomFeatureModel::random(7, 5, 2, rng);
  Matrix mean = Matrix::Zero(5, 2);
  for (long i = 0; i < 7; ++i) mean += per_sample_grad(m, i);
  mean /= 7.0;
  CHECK((mean - full_grad(m)).norm() < 1e-12 * mean.norm());
}

TEST_CASE("hand-computed noise moment and bound") {
  const auto m = tiny_two_sample();
  CHECK(risk(m) == doctest::Approx(1.0));
  CHECK(noise_second_moment(m) == doctest::Approx(2.0));
  const auto lemma = check_lemma_bound(m);
  CHECK(lemma.lhs == doctest::Approx(2.0));
  CHECK(lemma.rhs == doctest::Approx(4.0));
  CHECK(lemma.holds);
  CHECK(m.feature_norm_bound() == doctest::Approx(1.0));
}

TEST_CASE("risk-proportional bound holds on a thousand random instances") {
  RngStream rng(5);
  const long widths[] = {10, 100};
  const long samples[] = {5, 50};
  const long outputs[] = {1, 3};
  for (int i = 0; i < 1000; ++i) {
    const auto m = RandomFeatureModel::random(samples[(i / 2) % 2],
                                              widths[i % 2], outputs[(i / 4) % 2],
                                              rng);
    const auto lemma = check_lemma_bound(m);
    REQUIRE(lemma.holds);
  }
}

TEST_CASE("interpolation kills both the risk and the estimator noise") {
  RngStream rng(6);
  auto m = RandomFeatureModel::random(5, 100, 3, rng);  // width > samples*outputs
  m.weights = interpolating_weights(m);
  CHECK(risk(m) < 1e-22);
  CHECK(noise_second_moment(m) < 1e-20);
  const auto lemma = check_lemma_bound(m);
  CHECK(lemma.holds);
  // Every minibatch draw collapses to the zero gradient.
  RngStream draw_rng(7);
  CHECK(minibatch_oracle(m, 3, draw_rng).norm() < 1e-10);
}

TEST_CASE("minibatch averaging with replacement") {
  RngStream rng(8);
  const auto m = RandomFeatureModel::random(6, 12, 2, rng);

  // Batch size one reproduces the population spread.
  RngStream scan_rng(9);
  const auto one = minibatch_variance_scan(m, 1, 200000, scan_rng);
  CHECK(one.within);
  CHECK(one.predicted == doctest::Approx(noise_second_moment(m)));

  for (int n_b : {2, 4, 8}) {
    RngStream r2 = RngStream::substream(10, static_cast<std::uint64_t>(n_b));
    const auto scan = minibatch_variance_scan(m, n_b, 200000, r2);
    REQUIRE(scan.within);
  }

  // Sampling with replacement at n_b = N generally differs from the exact
  // gradient.
  RngStream r3(11);
  bool any_differs = false;
  const Matrix exact = full_grad(m);
  for (int i = 0; i < 20; ++i) {
    if ((minibatch_oracle(m, static_cast<int>(m.samples()), r3) - exact).norm() >
        1e-9) {
      any_differs = true;
    }
  }
  CHECK(any_differs);
}

TEST_CASE("contracts") {
  RngStream rng(12);
  const auto m = RandomFeatureModel::random(4, 3, 1, rng);
  CHECK_THROWS_AS(per_sample_grad(m, -1), ContractViolation);
  CHECK_THROWS_AS(per_sample_grad(m, 4), ContractViolation);
  CHECK_THROWS_AS(minibatch_oracle(m, 0, rng), ContractViolation);
  CHECK_THROWS_AS(minibatch_variance_scan(m, 1, 1, rng), ContractViolation);
  RandomFeatureModel bad = m;
  bad.weights = Matrix::Zero(5, 1);
  CHECK_THROWS_AS(risk(bad), ContractViolation);
}
