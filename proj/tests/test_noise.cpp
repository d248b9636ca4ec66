#include <cmath>
#include <vector>

#include "agneslab/errors.hpp"
#include "agneslab/noise.hpp"
#include "agneslab/rng.hpp"
#include "doctest.h"

using agneslab::RngStream;
using agneslab::Vec;
using agneslab::noise::NoiseModel;
using agneslab::noise::empirical_moments;

namespace {

Vec pt(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

// Every kind that satisfies the multiplicative bound by construction.
std::vector<NoiseModel> bounded_kinds() {
  const Vec dir = pt({0.5, 0.5, 0.5, 0.5});
  return {NoiseModel::exact(),
          NoiseModel::collinear(1.0),
          NoiseModel::collinear(10.0),
          NoiseModel::isotropic(3.0),
          NoiseModel::orthogonal(2.0),
          NoiseModel::fixed_direction(1.5, dir),
          NoiseModel::batched(NoiseModel::collinear(2.0), 4)};
}

}  // namespace

TEST_CASE("noise degenerates with the gradient") {
  RngStream rng(1);
  const Vec zero = Vec::Zero(2);
  CHECK(NoiseModel::collinear(10.0).sample(zero, rng).norm() == 0.0);
  CHECK(NoiseModel::isotropic(10.0).sample(zero, rng).norm() == 0.0);
  CHECK(NoiseModel::orthogonal(10.0).sample(zero, rng).norm() == 0.0);
  CHECK(NoiseModel::bernoulli_direction(10.0, pt({1.0, 0.0})).sample(zero, rng).norm() ==
        0.0);
}

TEST_CASE("exact oracle returns the gradient") {
  RngStream rng(2);
  const Vec g = pt({3.0, 4.0});
  CHECK(NoiseModel::exact().sample(g, rng) == g);
  CHECK(NoiseModel::exact().effective_sigma_sq() == 0.0);
}

TEST_CASE("orthogonal noise rejects dimension one") {
  RngStream rng(3);
  CHECK_THROWS_AS(NoiseModel::orthogonal(1.0).sample(pt({2.0}), rng),
                  agneslab::UnsupportedConfiguration);
}

TEST_CASE("orthogonal noise is orthogonal to the gradient") {
  RngStream rng(4);
  const Vec g = pt({1.0, -2.0, 0.5});
  const NoiseModel m = NoiseModel::orthogonal(2.0);
  for (int i = 0; i < 200; ++i) {
    const Vec s = m.sample(g, rng);
    CHECK(std::abs((s - g).dot(g)) < 1e-9 * g.norm() * (s - g).norm() + 1e-12);
  }
}

TEST_CASE("determinism: same seed, same draws") {
  for (const NoiseModel& m : bounded_kinds()) {
    RngStream a(99), b(99);
    const Vec g = pt({1.0, 2.0, -0.5, 0.25});
    for (int i = 0; i < 50; ++i) {
      CHECK(m.sample(g, a) == m.sample(g, b));
    }
  }
}

TEST_CASE("unbiasedness over one million draws") {
  const Vec g = pt({1.0, 2.0, -0.5, 0.25});
  long index = 0;
  for (const NoiseModel& m : bounded_kinds()) {
    RngStream rng = RngStream::substream(77, static_cast<std::uint64_t>(index++));
    const auto mo = empirical_moments(m, g, 1000000, rng);
    const double sd = std::sqrt(std::max(mo.second_central, 1e-30));
    CHECK((mo.mean - g).norm() <= 4.0 * sd / 1000.0 + 1e-12);
  }
}

TEST_CASE("signal-to-noise equality kinds hit sigma^2 |grad|^2") {
  const Vec g = pt({1.0, 2.0, -0.5, 0.25});
  const double gsq = g.squaredNorm();
  long index = 0;
  for (const NoiseModel& m : bounded_kinds()) {
    RngStream rng = RngStream::substream(78, static_cast<std::uint64_t>(index++));
    const long draws = 1000000;
    double sum = 0.0, sum_sq = 0.0;
    Vec s;
    for (long i = 0; i < draws; ++i) {
      m.sample(g, rng, s);
      const double dev = (s - g).squaredNorm();
      sum += dev;
      sum_sq += dev * dev;
    }
    const double mean = sum / draws;
    const double var = std::max(0.0, (sum_sq - sum * sum / draws) / (draws - 1.0));
    const double sem = std::sqrt(var / draws);
    const double target = m.effective_sigma_sq() * gsq;
    CHECK(std::abs(mean - target) <= 3.0 * sem + 1e-12);
  }
}

TEST_CASE("bernoulli direction: unbiased, matching second moment, rare jumps") {
  const Vec g = pt({0.01, 0.0});
  const double sigma = 1.0;
  const NoiseModel m = NoiseModel::bernoulli_direction(sigma, pt({1.0, 1.0}));
  RngStream rng(55);
  const long draws = 2000000;
  double sum = 0.0;
  Vec mean_acc = Vec::Zero(2);
  long jumps = 0;
  Vec s;
  for (long i = 0; i < draws; ++i) {
    m.sample(g, rng, s);
    mean_acc += s;
    const double dev = (s - g).squaredNorm();
    sum += dev;
    if (dev > 0.0) {
      ++jumps;
      // Jump magnitude stays of order one even for a tiny gradient.
      CHECK(dev > 0.9);
    }
  }
  const double target = sigma * sigma * g.squaredNorm();
  // Jumps are rare, so the moment estimate is relatively noisy.
  CHECK(sum / draws == doctest::Approx(target).epsilon(0.2));
  CHECK((mean_acc / draws - g).norm() < 5e-4);
  CHECK(jumps < draws / 1000);
  CHECK(jumps > 0);
}

TEST_CASE("batching reduces the effective intensity by n_b") {
  const Vec g = pt({1.0, 0.0});
  const NoiseModel m = NoiseModel::batched(NoiseModel::collinear(2.0), 4);
  CHECK(m.effective_sigma_sq() == doctest::Approx(1.0));
  RngStream rng(66);
  const auto mo = empirical_moments(m, g, 100000, rng);
  CHECK(mo.second_central == doctest::Approx(1.0 * g.squaredNorm()).epsilon(0.05));
}

TEST_CASE("batched second moment is the inner moment over n_b, within 3 SEM") {
  const Vec g = pt({1.5, -0.5, 2.0});
  const NoiseModel inner = NoiseModel::isotropic(2.0);
  for (int n_b : {2, 4, 8}) {
    const NoiseModel m = NoiseModel::batched(inner, n_b);
    RngStream rng = RngStream::substream(91, static_cast<std::uint64_t>(n_b));
    const long draws = 400000;
    double sum = 0.0, sum_sq = 0.0;
    Vec s;
    for (long i = 0; i < draws; ++i) {
      m.sample(g, rng, s);
      const double dev = (s - g).squaredNorm();
      sum += dev;
      sum_sq += dev * dev;
    }
    const double mean = sum / draws;
    const double var = std::max(0.0, (sum_sq - sum * sum / draws) / (draws - 1.0));
    const double sem = std::sqrt(var / draws);
    const double target = inner.effective_sigma_sq() * g.squaredNorm() / n_b;
    CHECK(std::abs(mean - target) <= 3.0 * sem);
  }
}

TEST_CASE("empirical moments of hand-checked cases") {
  RngStream rng(67);
  const auto exact = empirical_moments(NoiseModel::exact(), pt({1.0, -2.0}), 100, rng);
  CHECK(exact.mean == pt({1.0, -2.0}));
  CHECK(exact.second_central == 0.0);

  RngStream rng2(68);
  const auto col =
      empirical_moments(NoiseModel::collinear(1.0), pt({2.0, 0.0}), 1000000, rng2);
  CHECK((col.mean - pt({2.0, 0.0})).norm() <= 3.0 * 2.0 / 1000.0);
  CHECK(col.second_central == doctest::Approx(4.0).epsilon(0.02));

  RngStream rng3(69);
  const auto iso = empirical_moments(NoiseModel::isotropic(3.0),
                                     pt({1.0, 0.0, 0.0, 0.0}), 1000000, rng3);
  CHECK(iso.second_central == doctest::Approx(9.0).epsilon(0.02));

  CHECK_THROWS_AS(empirical_moments(NoiseModel::exact(), pt({1.0}), 1, rng),
                  agneslab::ContractViolation);
}

TEST_CASE("construction contracts") {
  CHECK_THROWS_AS(NoiseModel::collinear(-1.0), agneslab::ContractViolation);
  CHECK_THROWS_AS(NoiseModel::fixed_direction(1.0, Vec::Zero(2)),
                  agneslab::ContractViolation);
  CHECK_THROWS_AS(NoiseModel::batched(NoiseModel::exact(), 0),
                  agneslab::ContractViolation);
  CHECK_THROWS_AS(NoiseModel::exact().inner(), agneslab::ContractViolation);
}
