#pragma once

#include <cstdint>

#include "agneslab/types.hpp"

namespace agneslab {

/// Counter-based random stream: sample i is a pure function of (seed, i), so
/// a stream can be reproduced, split, or compared across builds of this
/// project. One 64-bit state increment per uniform; one uniform per normal.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed) : seed_(seed) {}

  /// Statistically independent stream for a given run index.
  static RngStream substream(std::uint64_t master_seed, std::uint64_t index);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();

  /// Uniform draw strictly inside (0, 1).
  double next_uniform();

  /// Standard normal via the inverse CDF; consumes exactly one uniform.
  double next_normal();

  void fill_normal(Vec& out);

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

/// Quantile function of the standard normal distribution (AS241, double
/// precision variant). Requires p in (0, 1).
double inverse_normal_cdf(double p);

}  // namespace agneslab
