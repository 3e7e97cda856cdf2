#pragma once

// Trajectory error metrics: error series against interpolated ground truth,
// RMSE, nearest-rank percentiles, empirical CDF, endpoint error.

#include <span>
#include <utility>
#include <vector>

#include "edgebot/sim.hpp"

namespace edgebot::eval {

struct ErrorSeries {
  std::vector<double> e;          // meters, all >= 0
  std::vector<Timestamp> t;       // sample timestamps
};

// Planar Euclidean error at each estimate timestamp, against ground truth
// linearly interpolated to that timestamp. Throws if an estimate timestamp
// falls outside the ground-truth span or either input is empty.
ErrorSeries error_series(std::span<const sim::TimedPose> est,
                         const sim::GroundTruthTrajectory& gt);

// sqrt(sum e_i^2 / n). Throws on empty input.
double rmse(const ErrorSeries& es);

// Nearest-rank percentile: the ceil(q*n)-th smallest error, 0 < q <= 1.
double percentile(const ErrorSeries& es, double q);

// Empirical CDF with one step per distinct error value; last fraction == 1.
std::vector<std::pair<double, double>> cdf(const ErrorSeries& es);

// Error at the final estimate timestamp.
double endpoint_error(std::span<const sim::TimedPose> est,
                      const sim::GroundTruthTrajectory& gt);

}  // namespace edgebot::eval
