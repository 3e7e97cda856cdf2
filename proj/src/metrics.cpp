#include "edgebot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edgebot::eval {

namespace {

// Ground-truth position at time t, linear between samples.
Vec2 interpolate(const sim::GroundTruthTrajectory& gt, Timestamp t) {
  const auto& s = gt.samples;
  if (t < s.front().t || t > s.back().t) {
    throw std::out_of_range("error_series: estimate timestamp outside ground-truth span");
  }
  auto it = std::lower_bound(
      s.begin(), s.end(), t,
      [](const sim::TimedPose& a, Timestamp tt) { return a.t < tt; });
  if (it->t == t || it == s.begin()) return it->pose.position();
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double f = static_cast<double>(t.micros - lo.t.micros) /
                   static_cast<double>(hi.t.micros - lo.t.micros);
  return {lo.pose.x + f * (hi.pose.x - lo.pose.x),
          lo.pose.y + f * (hi.pose.y - lo.pose.y)};
}

}  // namespace

ErrorSeries error_series(std::span<const sim::TimedPose> est,
                         const sim::GroundTruthTrajectory& gt) {
  if (est.empty() || gt.samples.empty()) {
    throw std::invalid_argument("error_series: empty input");
  }
  ErrorSeries es;
  es.e.reserve(est.size());
  es.t.reserve(est.size());
  for (const auto& p : est) {
    const Vec2 g = interpolate(gt, p.t);
    es.e.push_back(std::hypot(p.pose.x - g.x, p.pose.y - g.y));
    es.t.push_back(p.t);
  }
  return es;
}

double rmse(const ErrorSeries& es) {
  if (es.e.empty()) throw std::invalid_argument("rmse: empty series");
  double ss = 0.0;
  for (double e : es.e) ss += e * e;
  return std::sqrt(ss / static_cast<double>(es.e.size()));
}

double percentile(const ErrorSeries& es, double q) {
  if (es.e.empty()) throw std::invalid_argument("percentile: empty series");
  if (!(q > 0.0) || q > 1.0) {
    throw std::invalid_argument("percentile: q must be in (0, 1]");
  }
  const size_t n = es.e.size();
  // ceil(q*n) with a guard against FP noise like 0.9*10 = 9.000000000000002.
  auto rank = static_cast<size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  rank = std::clamp<size_t>(rank, 1, n);
  std::vector<double> sorted(es.e);
  std::nth_element(sorted.begin(), sorted.begin() + (rank - 1), sorted.end());
  return sorted[rank - 1];
}

std::vector<std::pair<double, double>> cdf(const ErrorSeries& es) {
  if (es.e.empty()) throw std::invalid_argument("cdf: empty series");
  std::vector<double> sorted(es.e);
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<std::pair<double, double>> out;
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

double endpoint_error(std::span<const sim::TimedPose> est,
                      const sim::GroundTruthTrajectory& gt) {
  if (est.empty()) throw std::invalid_argument("endpoint_error: empty estimate");
  return error_series(est.last(1), gt).e.front();
}

}  // namespace edgebot::eval
