#include "edgebot/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace edgebot::sim {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

bool inside_area(const Vec2& p, double w, double h) {
  return p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= h;
}

// One piece of the constant-speed timeline, in integer microseconds.
struct Segment {
  uint64_t t0 = 0;
  uint64_t t1 = 0;
  Vec2 p0, p1;
  double heading = 0.0;
};

std::vector<Segment> build_timeline(const Scenario& s) {
  const auto& wp = s.cfg.waypoints;
  std::vector<Segment> segs;
  uint64_t t = 0;
  for (size_t i = 0; i + 1 < wp.size(); ++i) {
    const double len = distance(wp[i], wp[i + 1]);
    const double heading = std::atan2(wp[i + 1].y - wp[i].y, wp[i + 1].x - wp[i].x);
    const auto dur = static_cast<uint64_t>(std::llround(len / s.cfg.speed * 1e6));
    segs.push_back({t, t + dur, wp[i], wp[i + 1], heading});
    t += dur;
    if (i + 2 < wp.size()) {
      // One-tick pause at the corner; heading stays on the incoming leg and
      // steps to the outgoing leg at the pause end.
      segs.push_back({t, t + s.tick_us, wp[i + 1], wp[i + 1], heading});
      t += s.tick_us;
    }
  }
  return segs;
}

}  // namespace

uint64_t derive_seed(uint64_t seed, uint64_t stream_tag) {
  return splitmix64(seed ^ splitmix64(stream_tag));
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  if (cfg.waypoints.size() < 2) {
    throw std::invalid_argument("scenario: need at least 2 waypoints");
  }
  if (!(cfg.speed > 0.0)) {
    throw std::invalid_argument("scenario: speed must be > 0");
  }
  if (cfg.imu_rate <= 0 || cfg.rtt_rate <= 0 || cfg.imu_rate % cfg.rtt_rate != 0) {
    throw std::invalid_argument(
        "scenario: imu_rate must be a positive integer multiple of rtt_rate");
  }
  if (1000000 % cfg.imu_rate != 0) {
    throw std::invalid_argument("scenario: imu_rate must divide 1e6 us evenly");
  }
  for (const auto& w : cfg.waypoints) {
    if (!inside_area(w, cfg.area_w, cfg.area_h)) {
      throw std::invalid_argument("scenario: waypoint outside area");
    }
  }
  for (size_t i = 0; i + 1 < cfg.waypoints.size(); ++i) {
    if (distance(cfg.waypoints[i], cfg.waypoints[i + 1]) <= 0.0) {
      throw std::invalid_argument("scenario: consecutive waypoints coincide");
    }
  }
  if (cfg.aps.size() > 255) {
    throw std::invalid_argument("scenario: at most 255 APs (u8 ap_id)");
  }
  for (const auto& ap : cfg.aps) {
    if (!inside_area(ap, cfg.area_w, cfg.area_h)) {
      throw std::invalid_argument("scenario: AP outside area");
    }
  }
  const auto& in = cfg.imu_noise;
  if (in.gyro_sigma < 0 || in.odom_sigma < 0) {
    throw std::invalid_argument("scenario: noise sigmas must be >= 0");
  }
  const auto& rn = cfg.rtt_noise;
  if (rn.range_sigma < 0 || rn.multipath_prob < 0 || rn.multipath_prob > 1 ||
      rn.dropout_prob < 0 || rn.dropout_prob > 1 || !(rn.multipath_bias_mean > 0)) {
    throw std::invalid_argument("scenario: invalid RTT noise model");
  }

  Scenario s;
  s.cfg = cfg;
  s.tick_us = 1000000ull / static_cast<uint64_t>(cfg.imu_rate);
  s.ticks_per_epoch = cfg.imu_rate / cfg.rtt_rate;
  s.epoch_us = s.tick_us * static_cast<uint64_t>(s.ticks_per_epoch);
  return s;
}

ScenarioConfig preset_scenario(std::string_view name) {
  // Leg lengths are integer multiples of the 0.0125 m tick step and chosen so
  // one lap (legs + 4 corner pauses) is an exact multiple of the RTT epoch:
  // revisits then land on identical sample positions, epoch after epoch.
  auto lap_path = [](Vec2 a, Vec2 b, Vec2 c, Vec2 d, int laps,
                     int extra_legs) {
    std::vector<Vec2> wp;
    wp.push_back(a);
    const Vec2 corners[4] = {b, c, d, a};
    for (int lap = 0; lap < laps; ++lap) {
      for (const auto& p : corners) wp.push_back(p);
    }
    const Vec2 extra[2] = {b, c};
    for (int i = 0; i < extra_legs; ++i) wp.push_back(extra[i]);
    return wp;
  };

  ScenarioConfig cfg;
  cfg.speed = 1.25;
  cfg.imu_rate = 100;
  cfg.rtt_rate = 5;
  // Heading error is random-walk dominated: on lap paths a constant gyro
  // bias mostly cancels, so the walk term carries the dead-reckoning drift.
  cfg.imu_noise = {1.5e-4, 1.5e-3, 0.01, 0.01};
  cfg.rtt_noise = {0.15, 0.1, 1.5, 0.05};
  cfg.seed = 0;

  if (name == "exp1") {
    // 10x5 m house floor, 14 laps of a 7.9875 x 2.9875 m rectangle:
    // 307.3 m of path against the paper run's 308.8 m. AP placement is
    // deliberately asymmetric: a symmetric layout makes mirror-image
    // positions share fingerprints, which floods the matcher.
    cfg.area_w = 10.0;
    cfg.area_h = 5.0;
    cfg.waypoints = lap_path({1.0, 1.0}, {8.9875, 1.0}, {8.9875, 3.9875},
                             {1.0, 3.9875}, 14, 0);
    cfg.aps = {{0.5, 0.5}, {9.5, 1.25}, {7.0, 4.5}, {2.25, 3.5}};
    return cfg;
  }
  if (name == "exp2") {
    // 20x35 m area, 2.5 laps of a 15.9875 x 30.9875 m rectangle: ~234.9 m
    // of path against the paper run's 236 m.
    cfg.area_w = 20.0;
    cfg.area_h = 35.0;
    cfg.waypoints = lap_path({2.0, 2.0}, {17.9875, 2.0}, {17.9875, 32.9875},
                             {2.0, 32.9875}, 2, 2);
    cfg.aps = {{1.0, 1.5}, {19.0, 5.0}, {15.5, 34.0}, {2.5, 26.0}};
    return cfg;
  }
  throw std::invalid_argument("unknown scenario preset: " + std::string(name));
}

GroundTruthTrajectory sample_ground_truth(const Scenario& s) {
  const auto segs = build_timeline(s);
  const uint64_t total_us = segs.back().t1;
  const uint64_t n_ticks = total_us / s.tick_us;

  GroundTruthTrajectory gt;
  gt.tick_us = s.tick_us;
  gt.samples.reserve(n_ticks + 1);

  size_t si = 0;
  for (uint64_t k = 0; k <= n_ticks; ++k) {
    const uint64_t t = k * s.tick_us;
    // A sample on a boundary belongs to the later segment, so a sample at a
    // pause end already carries the outgoing heading.
    while (si + 1 < segs.size() && t >= segs[si].t1) ++si;
    const Segment& seg = segs[si];
    const double f =
        seg.t1 == seg.t0
            ? 0.0
            : static_cast<double>(t - seg.t0) / static_cast<double>(seg.t1 - seg.t0);
    gt.samples.push_back({Timestamp{t},
                          Pose2(seg.p0.x + f * (seg.p1.x - seg.p0.x),
                                seg.p0.y + f * (seg.p1.y - seg.p0.y),
                                seg.heading)});
  }

  double len = 0.0;
  for (size_t i = 1; i < gt.samples.size(); ++i) {
    len += distance(gt.samples[i - 1].pose.position(),
                    gt.samples[i].pose.position());
  }
  gt.path_length = len;
  return gt;
}

ImuNoiseSynth::ImuNoiseSynth(const ImuNoiseModel& m, uint64_t seed, double dt)
    : m_(m), dt_(dt), sqrt_dt_(std::sqrt(dt)), rng_(derive_seed(seed, 0x1D40)) {}

OdometrySample ImuNoiseSynth::corrupt(Timestamp t, double true_dd,
                                      double true_dtheta) {
  OdometrySample od;
  od.t = t;
  od.dd = true_dd * (1.0 + m_.odom_scale_err) +
          gauss_(rng_) * m_.odom_sigma * sqrt_dt_;
  od.dtheta = true_dtheta + m_.gyro_bias * dt_ +
              gauss_(rng_) * m_.gyro_sigma * sqrt_dt_;
  return od;
}

RttNoiseSynth::RttNoiseSynth(const RttNoiseModel& m, uint64_t seed)
    : m_(m),
      rng_(derive_seed(seed, 0x277)),
      uniform_(0.0, 1.0),
      expo_(1.0 / m.multipath_bias_mean) {}

std::optional<double> RttNoiseSynth::sample(double true_range) {
  if (uniform_(rng_) < m_.dropout_prob) {
    return std::nullopt;
  }
  double r = true_range + gauss_(rng_) * m_.range_sigma;
  if (uniform_(rng_) < m_.multipath_prob) {
    r += expo_(rng_);  // multipath only lengthens the measured range
  }
  return std::max(0.0, r);
}

std::vector<OdometrySample> synthesize_imu(const GroundTruthTrajectory& gt,
                                           const ImuNoiseModel& n,
                                           uint64_t seed) {
  if (gt.samples.empty()) {
    throw std::invalid_argument("synthesize_imu: empty trajectory");
  }
  ImuNoiseSynth synth(n, seed, static_cast<double>(gt.tick_us) * 1e-6);
  std::vector<OdometrySample> out;
  out.reserve(gt.samples.size() - 1);
  for (size_t k = 1; k < gt.samples.size(); ++k) {
    const Pose2& a = gt.samples[k - 1].pose;
    const Pose2& b = gt.samples[k].pose;
    const double true_dd = distance(a.position(), b.position());
    const double true_dtheta = (b.theta - a.theta).rad();
    out.push_back(synth.corrupt(gt.samples[k].t, true_dd, true_dtheta));
  }
  return out;
}

std::vector<RttSample> synthesize_rtt(const GroundTruthTrajectory& gt,
                                      const Scenario& s,
                                      const RttNoiseModel& n, uint64_t seed) {
  if (s.cfg.aps.empty()) {
    throw std::invalid_argument("synthesize_rtt: scenario has no APs");
  }
  RttNoiseSynth synth(n, seed);
  std::vector<RttSample> out;
  const size_t step = static_cast<size_t>(s.ticks_per_epoch);
  for (size_t k = step; k < gt.samples.size(); k += step) {
    const Vec2 pos = gt.samples[k].pose.position();
    for (size_t ap = 0; ap < s.cfg.aps.size(); ++ap) {
      if (auto r = synth.sample(distance(pos, s.cfg.aps[ap]))) {
        out.push_back({gt.samples[k].t, static_cast<uint8_t>(ap), *r});
      }
    }
  }
  return out;
}

}  // namespace edgebot::sim
