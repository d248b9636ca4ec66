#pragma once

#include <Eigen/Core>

namespace agneslab {

using Vec = Eigen::VectorXd;

// Trajectories whose objective value exceeds this cap (or turns non-finite)
// are frozen and flagged as diverged; ensemble means use the capped value.
inline constexpr double kDivergenceCap = 1e12;

}  // namespace agneslab
