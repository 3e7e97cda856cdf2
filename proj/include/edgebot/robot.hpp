#pragma once

// The minimalistic robot: batches sensor streams into frames, transmits them
// through a bounded tx buffer with an IMU-first drop policy, and logs (or, in
// closed-loop mode, executes) commands from the edge.

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgebot/sim.hpp"
#include "edgebot/transport.hpp"
#include "edgebot/wire.hpp"

namespace edgebot::robot {

struct RobotConfig {
  size_t tx_buffer_frames = 64;
  int imu_batch = 20;               // samples per ImuBatch frame
  double heartbeat_period_s = 1.0;
  bool closed_loop = false;
  double closed_loop_duration_s = 0.0;  // 0: use the scenario timeline length
};

struct SessionStats {
  uint64_t generated_imu = 0;  // ImuBatch frames
  uint64_t generated_rtt = 0;
  uint64_t generated_heartbeat = 0;
  uint64_t sent_imu = 0;
  uint64_t sent_rtt = 0;
  uint64_t sent_heartbeat = 0;
  uint64_t dropped_imu = 0;
  uint64_t dropped_rtt = 0;
  uint64_t dropped_heartbeat = 0;
  uint64_t commands_received = 0;
  bool aborted = false;
  std::string error;

  uint64_t sent_total() const { return sent_imu + sent_rtt + sent_heartbeat; }
  std::string summary() const;  // structured key=value text
};

struct CommandLogEntry {
  Timestamp t;  // receive time (session clock)
  wire::CommandPayload cmd;
};

// Bounded FIFO of encoded frames. When full, the oldest queued ImuBatch is
// evicted to make room; if none is queued, an incoming ImuBatch is dropped;
// other kinds are dropped only when the buffer holds no ImuBatch at all.
class TxBuffer {
 public:
  explicit TxBuffer(size_t capacity) : capacity_(capacity) {}

  // Returns the kind that was dropped to make room, if any.
  std::optional<wire::FrameKind> enqueue(wire::FrameKind kind,
                                         std::vector<uint8_t> bytes);
  // Pushes queued bytes into the transport; partial writes keep their offset.
  // Returns the number of frames fully handed over.
  size_t pump(net::ByteStream& out);

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::vector<wire::FrameKind> take_sent_kinds() {
    return std::move(sent_kinds_);
  }
  // Empties the buffer and reports what was still queued (undeliverable
  // frames count as dropped so sent + dropped always equals generated).
  std::vector<wire::FrameKind> drain_remaining();

 private:
  struct Entry {
    wire::FrameKind kind;
    std::vector<uint8_t> bytes;
    size_t offset = 0;
  };
  size_t capacity_;
  std::deque<Entry> entries_;
  std::vector<wire::FrameKind> sent_kinds_;
};

// Unicycle drive for closed-loop mode: follows the last command's (v, omega)
// until its deadline, then halts.
struct ClosedLoopDrive {
  Pose2 pose;
  double v = 0.0;      // m/s
  double omega = 0.0;  // rad/s
  uint64_t deadline_us = 0;

  void apply(const wire::CommandPayload& cmd, uint64_t now_us);
  // Advances one tick of dt seconds; returns the true (dd, dtheta) executed.
  std::pair<double, double> step(uint64_t tick_end_us, double dt);
};

class RobotSession {
 public:
  // Open-loop: replays pre-synthesized sensor streams.
  RobotSession(const sim::Scenario& scenario,
               std::vector<sim::OdometrySample> odometry,
               std::vector<sim::RttSample> rtt, RobotConfig cfg);
  // Closed-loop: drives a unicycle from received commands and synthesizes
  // sensors from the executed motion.
  RobotSession(const sim::Scenario& scenario, Pose2 start, RobotConfig cfg);

  // Runs the single-task event loop to stream end. Transport failures abort
  // the session; stats are still returned (aborted flag + error set).
  // on_tick, when set, runs after each tick's transmit/receive work; the
  // loopback runner uses it to interleave the edge deterministically.
  SessionStats run(net::ByteStream& transport,
                   const std::function<void()>& on_tick = {});

  const std::vector<CommandLogEntry>& command_log() const { return log_; }
  const SessionStats& stats() const { return stats_; }
  // Closed-loop only: the executed (true) trajectory, one pose per tick.
  const std::vector<sim::TimedPose>& driven_trajectory() const {
    return driven_;
  }

 private:
  void enqueue_frame(const wire::Frame& f);
  void emit_batch();
  void poll_commands(net::ByteStream& transport, Timestamp now);

  sim::Scenario scenario_;
  RobotConfig cfg_;
  std::vector<sim::OdometrySample> odometry_;
  std::vector<sim::RttSample> rtt_;
  Pose2 start_pose_;

  TxBuffer tx_;
  uint32_t next_seq_ = 0;
  std::vector<wire::ImuSampleFx> batch_;
  uint64_t batch_last_t_us_ = 0;
  wire::FrameReader rx_;
  std::vector<CommandLogEntry> log_;
  std::vector<sim::TimedPose> driven_;
  std::optional<ClosedLoopDrive> drive_;
  SessionStats stats_;
};

}  // namespace edgebot::robot
