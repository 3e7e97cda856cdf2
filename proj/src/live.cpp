#include "edgebot/live.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <thread>

#include "edgebot/io.hpp"

namespace edgebot::live {

namespace {

void send_all(net::ByteStream& stream, const std::vector<uint8_t>& bytes) {
  size_t off = 0;
  int spins = 0;
  while (off < bytes.size()) {
    const size_t n = stream.send(
        std::span<const uint8_t>(bytes.data() + off, bytes.size() - off));
    off += n;
    if (n == 0) {
      if (++spins > 200000) {
        throw std::runtime_error("command send stalled");
      }
      std::this_thread::sleep_for(std::chrono::microseconds(50));
    }
  }
}

}  // namespace

edge::PipelineConfig live_pipeline_config(const cfg::FileConfig& fc,
                                          bool enable_planner) {
  const sim::Scenario s = sim::build_scenario(fc.scenario);
  edge::PipelineConfig pc;
  const auto& wp = fc.scenario.waypoints;
  pc.start_pose = Pose2(wp[0].x, wp[0].y,
                        std::atan2(wp[1].y - wp[0].y, wp[1].x - wp[0].x));
  pc.num_aps = fc.scenario.aps.size();
  pc.tick_us = s.tick_us;
  pc.epoch_us = s.epoch_us;
  pc.scheduler = fc.edge.scheduler;
  pc.planner = fc.edge.planner;
  pc.cov = fc.edge.cov;
  pc.loop = fc.edge.loop;
  pc.solver = fc.edge.solver;
  if (enable_planner) pc.waypoints = wp;
  pc.online = true;
  return pc;
}

EdgeRunResult run_edge_live(net::ByteStream& stream, const cfg::FileConfig& fc,
                            bool enable_planner, bool quiet) {
  edge::EdgePipeline pipeline(live_pipeline_config(fc, enable_planner));
  edge::BoundedFrameQueue queue(1024);
  std::atomic<bool> ingest_failed{false};
  std::string ingest_error;

  std::thread ingest([&] {
    wire::FrameReader reader;
    uint8_t buf[8192];
    try {
      while (true) {
        const size_t n = stream.recv(std::span<uint8_t>(buf, sizeof(buf)));
        if (n > 0) {
          reader.push(std::span<const uint8_t>(buf, n));
          while (auto outcome = reader.next()) {
            if (std::holds_alternative<wire::DecodeError>(*outcome)) {
              throw std::runtime_error(
                  std::string("decode error: ") +
                  std::string(wire::to_string(
                      std::get<wire::DecodeError>(*outcome))));
            }
            queue.push(std::move(std::get<wire::Frame>(*outcome)));
          }
        } else if (stream.recv_closed()) {
          break;
        } else {
          std::this_thread::sleep_for(std::chrono::microseconds(200));
        }
      }
    } catch (const std::exception& ex) {
      ingest_error = ex.what();
      ingest_failed = true;
    }
    queue.close();
  });

  EdgeRunResult result;
  auto last_status = std::chrono::steady_clock::now();
  try {
    while (auto frame = queue.pop()) {
      pipeline.on_frame(*frame);
      for (const auto& f : pipeline.take_outgoing()) {
        send_all(stream, wire::encode_frame(f));
      }
      if (!quiet) {
        const auto now = std::chrono::steady_clock::now();
        if (now - last_status >= std::chrono::seconds(1)) {
          last_status = now;
          const auto est = pipeline.estimate();
          std::printf("keyframes=%zu last_chi2=%.3f dup=%llu gaps=%llu\n",
                      est.keyframe_count, est.last_solve.final_chi2,
                      (unsigned long long)pipeline.counters().duplicates,
                      (unsigned long long)pipeline.counters().seq_gaps);
          std::fflush(stdout);
        }
      }
    }
    pipeline.finish();
  } catch (const std::exception& ex) {
    result.aborted = true;
    result.error = ex.what();
  }
  ingest.join();
  if (ingest_failed) {
    result.aborted = true;
    if (result.error.empty()) result.error = ingest_error;
  }

  result.counters = pipeline.counters();
  result.keyframes = pipeline.keyframe_count();
  result.trajectory = pipeline.trajectory();
  result.solve_log = pipeline.solve_log();
  return result;
}

LoopbackRunResult run_loopback(const cfg::FileConfig& fc, bool closed_loop,
                               net::StallWindow stall) {
  const sim::Scenario scenario = sim::build_scenario(fc.scenario);
  auto [robot_end, edge_end] = net::make_loopback_pair(stall, {});

  edge::EdgePipeline pipeline(live_pipeline_config(fc, closed_loop));
  wire::FrameReader reader;

  auto edge_step = [&] {
    uint8_t buf[8192];
    while (true) {
      const size_t n = edge_end->recv(std::span<uint8_t>(buf, sizeof(buf)));
      if (n == 0) break;
      reader.push(std::span<const uint8_t>(buf, n));
    }
    while (auto outcome = reader.next()) {
      if (std::holds_alternative<wire::DecodeError>(*outcome)) {
        throw std::runtime_error(
            std::string("decode error: ") +
            std::string(wire::to_string(std::get<wire::DecodeError>(*outcome))));
      }
      pipeline.on_frame(std::get<wire::Frame>(*outcome));
    }
    for (const auto& f : pipeline.take_outgoing()) {
      const auto bytes = wire::encode_frame(f);
      edge_end->send(std::span<const uint8_t>(bytes.data(), bytes.size()));
    }
  };

  LoopbackRunResult out;
  robot::RobotConfig rcfg = fc.robot;
  if (closed_loop) {
    const auto& wp = fc.scenario.waypoints;
    const Pose2 start(wp[0].x, wp[0].y,
                      std::atan2(wp[1].y - wp[0].y, wp[1].x - wp[0].x));
    robot::RobotSession session(scenario, start, rcfg);
    out.robot_stats = session.run(*robot_end, edge_step);
    out.commands = session.command_log();
    out.driven = session.driven_trajectory();
  } else {
    const sim::GroundTruthTrajectory gt = sim::sample_ground_truth(scenario);
    auto odometry =
        sim::synthesize_imu(gt, scenario.cfg.imu_noise, scenario.cfg.seed);
    auto rtt =
        sim::synthesize_rtt(gt, scenario, scenario.cfg.rtt_noise, scenario.cfg.seed);
    robot::RobotSession session(scenario, std::move(odometry), std::move(rtt),
                                rcfg);
    out.robot_stats = session.run(*robot_end, edge_step);
    out.commands = session.command_log();
  }

  edge_step();  // drain whatever the close left behind
  pipeline.finish();

  out.edge.counters = pipeline.counters();
  out.edge.keyframes = pipeline.keyframe_count();
  out.edge.trajectory = pipeline.trajectory();
  out.edge.solve_log = pipeline.solve_log();
  return out;
}

void write_edge_outputs(const std::string& out_dir, const EdgeRunResult& r) {
  std::filesystem::create_directories(out_dir);
  const std::string dir = out_dir + "/";
  io::write_trajectory_csv(dir + "trajectory_estimate.csv", r.trajectory);

  std::string log;
  char buf[256];
  for (const auto& e : r.solve_log) {
    std::snprintf(buf, sizeof(buf),
                  "t_us=%llu keyframes=%zu iterations=%d chi2_initial=%s "
                  "chi2_final=%s diverged=%d\n",
                  (unsigned long long)e.t_us, e.keyframes, e.stats.iterations,
                  io::format_num(e.stats.initial_chi2).c_str(),
                  io::format_num(e.stats.final_chi2).c_str(),
                  e.diverged ? 1 : 0);
    log += buf;
  }
  io::write_text(dir + "solve_stats.log", log);

  std::string summary;
  std::snprintf(buf, sizeof(buf),
                "keyframes=%zu\nframes=%llu\nduplicates=%llu\nseq_gaps=%llu\n"
                "odom_samples=%llu\nrtt_samples=%llu\nheartbeats=%llu\n"
                "solves=%zu\naborted=%d\n",
                r.keyframes, (unsigned long long)r.counters.frames,
                (unsigned long long)r.counters.duplicates,
                (unsigned long long)r.counters.seq_gaps,
                (unsigned long long)r.counters.odom_samples,
                (unsigned long long)r.counters.rtt_samples,
                (unsigned long long)r.counters.heartbeats, r.solve_log.size(),
                r.aborted ? 1 : 0);
  summary = buf;
  if (!r.error.empty()) summary += "error=" + r.error + "\n";
  io::write_text(dir + "run_summary.txt", summary);
}

}  // namespace edgebot::live
