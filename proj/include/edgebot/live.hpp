#pragma once

// Live session runners shared by the CLI and the integration tests: the
// deterministic single-process loopback mode and the threaded byte-stream
// (TCP) edge loop.

#include <string>
#include <vector>

#include "edgebot/config.hpp"
#include "edgebot/edge.hpp"
#include "edgebot/robot.hpp"
#include "edgebot/transport.hpp"

namespace edgebot::live {

struct EdgeRunResult {
  edge::IngestCounters counters;
  size_t keyframes = 0;
  std::vector<sim::TimedPose> trajectory;
  std::vector<edge::SolveLogEntry> solve_log;
  bool aborted = false;
  std::string error;
};

edge::PipelineConfig live_pipeline_config(const cfg::FileConfig& fc,
                                          bool enable_planner);

// Drives the edge pipeline from the stream until the peer closes. Two tasks:
// an ingestion thread decoding frames into a bounded queue and the control
// task consuming it, planning commands back through the stream. Prints a
// one-line status every second unless quiet.
EdgeRunResult run_edge_live(net::ByteStream& stream,
                            const cfg::FileConfig& fc, bool enable_planner,
                            bool quiet);

struct LoopbackRunResult {
  robot::SessionStats robot_stats;
  EdgeRunResult edge;
  std::vector<robot::CommandLogEntry> commands;
  std::vector<sim::TimedPose> driven;  // closed-loop true trajectory
};

// Robot and edge in one process over an in-memory loopback, interleaved on
// the robot's simulated clock; fully deterministic. stall silences the
// robot->edge direction within the window (backpressure experiments).
LoopbackRunResult run_loopback(const cfg::FileConfig& fc, bool closed_loop,
                               net::StallWindow stall = {});

// Edge artifact emission for live runs (estimate CSV, solve log, summary).
void write_edge_outputs(const std::string& out_dir, const EdgeRunResult& r);

}  // namespace edgebot::live
