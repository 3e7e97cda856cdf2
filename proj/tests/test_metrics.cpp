#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "edgebot/metrics.hpp"

using namespace edgebot;
using namespace edgebot::eval;

namespace {

sim::GroundTruthTrajectory straight_gt(size_t n = 101, double step = 0.01) {
  sim::GroundTruthTrajectory gt;
  gt.tick_us = 10000;
  for (size_t k = 0; k < n; ++k) {
    gt.samples.push_back({Timestamp{k * 10000}, Pose2(step * k, 0, 0)});
  }
  gt.path_length = step * (n - 1);
  return gt;
}

ErrorSeries series(std::vector<double> e) {
  ErrorSeries es;
  es.t.assign(e.size(), Timestamp{0});
  es.e = std::move(e);
  return es;
}

std::mt19937_64 rng(23);

}  // namespace

TEST_CASE("error series on matching estimates is zero") {
  const auto gt = straight_gt();
  const auto es = error_series(gt.samples, gt);
  for (double e : es.e) CHECK(e == 0.0);
}

TEST_CASE("uniform +1 m x shift gives constant error 1") {
  const auto gt = straight_gt();
  std::vector<sim::TimedPose> est;
  for (const auto& s : gt.samples) {
    est.push_back({s.t, Pose2(s.pose.x + 1.0, s.pose.y, 0)});
  }
  const auto es = error_series(est, gt);
  for (double e : es.e) CHECK(e == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ground truth interpolates linearly between samples") {
  const auto gt = straight_gt();
  // halfway between ticks, at the moving midpoint: error must be 0
  std::vector<sim::TimedPose> est = {{Timestamp{15000}, Pose2(0.015, 0, 0)}};
  const auto es = error_series(est, gt);
  CHECK(std::abs(es.e[0]) < 1e-12);
}

TEST_CASE("estimate timestamps outside the span are an error") {
  const auto gt = straight_gt();
  std::vector<sim::TimedPose> est = {{Timestamp{2000000}, Pose2()}};
  CHECK_THROWS_AS(error_series(est, gt), std::out_of_range);
  CHECK_THROWS_AS(error_series({}, gt), std::invalid_argument);
}

TEST_CASE("rmse examples") {
  CHECK(rmse(series({0, 0, 0})) == 0.0);
  CHECK(rmse(series({1, 1, 1})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(rmse(series({3, 4})) - std::sqrt(12.5)) < 1e-12);
  CHECK_THROWS_AS(rmse(series({})), std::invalid_argument);
}

TEST_CASE("rmse is zero only for an all-zero series") {
  CHECK(rmse(series({0, 0, 1e-9})) > 0.0);
}

TEST_CASE("percentile nearest-rank examples") {
  ErrorSeries es = series({10, 9, 8, 7, 6, 5, 4, 3, 2, 1});
  CHECK(percentile(es, 0.9) == 9.0);  // ceil(0.9*10) = 9th smallest
  CHECK(percentile(es, 1.0) == 10.0);
  CHECK(percentile(es, 0.05) == 1.0);
  const ErrorSeries equal = series({2.5, 2.5, 2.5});
  for (double q : {0.1, 0.5, 0.9, 1.0}) CHECK(percentile(equal, q) == 2.5);
  CHECK_THROWS_AS(percentile(es, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(percentile(es, 1.1), std::invalid_argument);
  CHECK_THROWS_AS(percentile(series({}), 0.5), std::invalid_argument);
}

TEST_CASE("cdf examples") {
  const auto c = cdf(series({3, 1, 2}));
  REQUIRE(c.size() == 3);
  CHECK(c[0] == std::pair<double, double>{1.0, 1.0 / 3});
  CHECK(c[1] == std::pair<double, double>{2.0, 2.0 / 3});
  CHECK(c[2] == std::pair<double, double>{3.0, 1.0});

  const auto dup = cdf(series({2, 2}));
  REQUIRE(dup.size() == 1);
  CHECK(dup[0].first == 2.0);
  CHECK(dup[0].second == 1.0);
  CHECK_THROWS_AS(cdf(series({})), std::invalid_argument);
}

TEST_CASE("cdf is monotone with terminal 1 and consistent with percentile") {
  std::uniform_real_distribution<double> err(0.0, 10.0);
  std::uniform_int_distribution<int> len(1, 200);
  std::uniform_real_distribution<double> qd(0.01, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> e(len(rng));
    for (auto& v : e) v = err(rng);
    if (trial % 3 == 0 && e.size() > 3) e[1] = e[0];  // force duplicates
    const auto es = series(e);
    const auto c = cdf(es);
    for (size_t k = 1; k < c.size(); ++k) {
      CHECK(c[k].first > c[k - 1].first);
      CHECK(c[k].second >= c[k - 1].second);
    }
    CHECK(c.back().second == 1.0);

    // percentile(es, q) equals the smallest error whose CDF >= q
    const double q = qd(rng);
    const double p = percentile(es, q);
    double smallest = c.back().first;
    for (const auto& [val, frac] : c) {
      if (frac >= q - 1e-12) {
        smallest = val;
        break;
      }
    }
    CHECK(p == smallest);
  }
}

TEST_CASE("endpoint error examples") {
  const auto gt = straight_gt();
  CHECK(endpoint_error(gt.samples, gt) == 0.0);

  std::vector<sim::TimedPose> est(gt.samples.begin(), gt.samples.end());
  est.back().pose = Pose2(est.back().pose.x + 3.0, est.back().pose.y + 4.0, 0);
  CHECK(endpoint_error(est, gt) == doctest::Approx(5.0).epsilon(1e-12));
}
