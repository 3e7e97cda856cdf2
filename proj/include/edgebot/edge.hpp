#pragma once

// The offloaded control system: ingests frames, aligns 100 Hz odometry with
// 5 Hz RTT epochs, schedules keyframes and solver runs, and plans commands.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "edgebot/estimator.hpp"
#include "edgebot/sim.hpp"
#include "edgebot/wire.hpp"

namespace edgebot::edge {

struct SchedulerConfig {
  bool keyframe_on_rtt_epoch = true;
  int solve_every_k = 5;        // keyframes between solver runs
  int command_period_ms = 500;
};

struct PlannerConfig {
  double k_v = 0.8;             // 1/s
  double k_omega = 1.5;         // 1/s
  double v_max = 1.4;           // m/s
  double omega_max = 1.5;       // rad/s
  double capture_radius = 0.3;  // m
};

struct Mission {
  std::vector<Vec2> waypoints;
  size_t next = 0;
  bool done() const { return next >= waypoints.size(); }
};

// Proportional unicycle law toward the next waypoint. Pops the waypoint when
// within the capture radius (and commands a stop for that period). Throws
// std::logic_error when the mission is already done.
wire::CommandPayload plan_command(const Pose2& estimate, Mission& mission,
                                  const PlannerConfig& cfg,
                                  uint16_t duration_ms);

struct IngestCounters {
  uint64_t frames = 0;
  uint64_t duplicates = 0;   // seq regressions, dropped
  uint64_t seq_gaps = 0;     // missing seqs (sender-side drops)
  uint64_t odom_samples = 0;
  uint64_t rtt_samples = 0;
  uint64_t heartbeats = 0;
  uint64_t unexpected = 0;
};

struct EstimateState {
  Pose2 latest;
  size_t keyframe_count = 0;
  est::SolveStats last_solve;
};

struct SolveLogEntry {
  uint64_t t_us = 0;           // stream time of the solve
  size_t keyframes = 0;
  est::SolveStats stats;
  bool diverged = false;
};

struct PipelineConfig {
  Pose2 start_pose;
  size_t num_aps = 0;
  uint64_t tick_us = 10000;
  uint64_t epoch_us = 200000;
  SchedulerConfig scheduler;
  PlannerConfig planner;
  est::KeyframeCovConfig cov;
  est::LoopDetectConfig loop;
  est::SolverConfig solver;
  std::vector<Vec2> waypoints;  // empty: planner inactive
  // online: detect closures per keyframe and solve on the scheduler cadence.
  // off: only build the graph (batch evaluation runs the solver itself).
  bool online = true;
};

class EdgePipeline {
 public:
  explicit EdgePipeline(PipelineConfig cfg);

  // Wire-level entry: dedupe/gap-detect, unpack, route.
  void on_frame(const wire::Frame& f);

  // Decoded-event entry (used directly by the in-process evaluation path).
  void on_odometry(Timestamp t, double dd, double dtheta);
  void on_rtt(Timestamp t, uint8_t ap_id, double range);
  void on_heartbeat(Timestamp t);

  // Closes every epoch covered by the stream and, in online mode, runs a
  // final solve over whatever arrived.
  void finish();

  std::vector<wire::Frame> take_outgoing();

  const est::PoseGraph& graph() const { return graph_; }
  est::PoseGraph& mutable_graph() { return graph_; }
  EstimateState estimate() const;
  const IngestCounters& counters() const { return counters_; }
  size_t keyframe_count() const { return keyframe_count_; }
  const std::vector<SolveLogEntry>& solve_log() const { return solve_log_; }
  uint64_t stream_time_us() const { return stream_time_us_; }

  // Keyframe poses (anchor included), the estimated trajectory.
  std::vector<sim::TimedPose> trajectory() const;

 private:
  struct EpochAcc {
    est::OdomAccumulator odom;
    std::vector<std::optional<double>> fp;
  };

  uint64_t epoch_of(uint64_t t_us) const {
    return (t_us + cfg_.epoch_us - 1) / cfg_.epoch_us;
  }
  EpochAcc& acc_for(uint64_t epoch);
  void advance_stream_time(uint64_t t_us);
  void close_epoch(uint64_t epoch);
  void run_solver(bool final_pass);
  void plan_due_commands();

  PipelineConfig cfg_;
  est::PoseGraph graph_;
  est::LoopDetector detector_;
  std::map<uint64_t, EpochAcc> open_epochs_;
  uint64_t next_epoch_to_close_ = 1;
  uint64_t stream_time_us_ = 0;
  size_t keyframe_count_ = 0;
  int keyframes_since_solve_ = 0;
  std::optional<uint32_t> last_seq_;
  IngestCounters counters_;
  Mission mission_;
  uint64_t next_command_us_;
  uint32_t out_seq_ = 0;
  std::vector<wire::Frame> outgoing_;
  std::vector<SolveLogEntry> solve_log_;
  est::SolveStats last_solve_;
};

// Bounded ordered hand-off between the ingestion task and the control task
// in the threaded live mode.
class BoundedFrameQueue {
 public:
  explicit BoundedFrameQueue(size_t capacity) : capacity_(capacity) {}

  void push(wire::Frame f);          // blocks while full
  std::optional<wire::Frame> pop();  // blocks; nullopt once closed and empty
  void close();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<wire::Frame> q_;
  size_t capacity_;
  bool closed_ = false;
};

}  // namespace edgebot::edge
