#pragma once

// Ground-truth trajectory generation in the two paper-analog environments
// plus noisy IMU-derived odometry and WiFi-RTT range synthesis. Everything
// is a pure function of (scenario, seed): identical inputs give bit-identical
// streams.

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "edgebot/geometry.hpp"

namespace edgebot::sim {

struct ImuNoiseModel {
  double gyro_bias = 0.0;       // rad/s, constant per run
  double gyro_sigma = 0.0;      // rad/sqrt(s) white noise
  double odom_scale_err = 0.0;  // multiplicative step-length error
  double odom_sigma = 0.0;      // m/sqrt(s) white noise
};

struct RttNoiseModel {
  double range_sigma = 0.0;         // m
  double multipath_prob = 0.0;      // [0,1]
  double multipath_bias_mean = 1.5; // m, exponential, strictly positive
  double dropout_prob = 0.0;        // [0,1]
};

struct ScenarioConfig {
  double area_w = 10.0;  // m
  double area_h = 5.0;   // m
  std::vector<Vec2> waypoints;
  double speed = 1.25;   // m/s
  int imu_rate = 100;    // Hz
  int rtt_rate = 5;      // Hz
  std::vector<Vec2> aps;
  ImuNoiseModel imu_noise;
  RttNoiseModel rtt_noise;
  uint64_t seed = 0;
};

// Validated scenario. tick/epoch arithmetic is done in integer microseconds
// so corner pauses and RTT epochs land exactly on the sample grid.
struct Scenario {
  ScenarioConfig cfg;
  uint64_t tick_us = 0;
  uint64_t epoch_us = 0;
  int ticks_per_epoch = 0;
};

// Throws std::invalid_argument on any config invariant violation.
Scenario build_scenario(const ScenarioConfig& cfg);

// Built-in presets: "exp1" (10x5 m house, 4 APs, ~307 m path) and
// "exp2" (20x35 m area, 4 APs, ~235 m path).
ScenarioConfig preset_scenario(std::string_view name);

struct TimedPose {
  Timestamp t;
  Pose2 pose;
};

struct GroundTruthTrajectory {
  std::vector<TimedPose> samples;  // one per IMU tick, period tick_us
  double path_length = 0.0;        // sum of consecutive sample distances
  uint64_t tick_us = 0;
};

// Constant-speed traversal of the waypoint polyline sampled at imu_rate.
// Heading follows the motion direction; at each interior waypoint the robot
// pauses for exactly one tick while the heading steps to the next leg.
GroundTruthTrajectory sample_ground_truth(const Scenario& s);

struct OdometrySample {
  Timestamp t;
  double dd = 0.0;      // m, body-frame forward increment
  double dtheta = 0.0;  // rad, heading increment
};

struct RttSample {
  Timestamp t;
  uint8_t ap_id = 0;
  double range = 0.0;  // m, >= 0
};

// Incremental per-tick IMU corruption; used by the batch synthesizer and the
// closed-loop robot drive.
class ImuNoiseSynth {
 public:
  ImuNoiseSynth(const ImuNoiseModel& m, uint64_t seed, double dt);
  OdometrySample corrupt(Timestamp t, double true_dd, double true_dtheta);

 private:
  ImuNoiseModel m_;
  double dt_;
  double sqrt_dt_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_;
};

// Incremental RTT range corruption. nullopt = dropout.
class RttNoiseSynth {
 public:
  RttNoiseSynth(const RttNoiseModel& m, uint64_t seed);
  std::optional<double> sample(double true_range);

 private:
  RttNoiseModel m_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_;
  std::uniform_real_distribution<double> uniform_;
  std::exponential_distribution<double> expo_;
};

std::vector<OdometrySample> synthesize_imu(const GroundTruthTrajectory& gt,
                                           const ImuNoiseModel& n,
                                           uint64_t seed);

std::vector<RttSample> synthesize_rtt(const GroundTruthTrajectory& gt,
                                      const Scenario& s,
                                      const RttNoiseModel& n, uint64_t seed);

// Stable seed derivation for independent substreams of one run.
uint64_t derive_seed(uint64_t seed, uint64_t stream_tag);

}  // namespace edgebot::sim
