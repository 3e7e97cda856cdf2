// edgebot: simulate scenarios, run the robot/edge pair (loopback or TCP),
// and evaluate localization methods with the trajectory metrics.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include "edgebot/config.hpp"
#include "edgebot/experiment.hpp"
#include "edgebot/io.hpp"
#include "edgebot/live.hpp"
#include "edgebot/transport.hpp"

namespace {

using namespace edgebot;

cfg::FileConfig load_or_default(const std::string& config_path,
                                const std::string& preset) {
  if (!config_path.empty()) return cfg::load_config_file(config_path);
  return cfg::default_config(preset.empty() ? "exp1" : preset);
}

int cmd_simulate(const std::string& config_path, const std::string& preset,
                 uint64_t seed, const std::string& out_dir) {
  cfg::FileConfig fc = load_or_default(config_path, preset);
  fc.scenario.seed = seed;
  const sim::Scenario s = sim::build_scenario(fc.scenario);
  const auto gt = sim::sample_ground_truth(s);
  const auto odometry = sim::synthesize_imu(gt, s.cfg.imu_noise, seed);
  const auto rtt = sim::synthesize_rtt(gt, s, s.cfg.rtt_noise, seed);

  std::filesystem::create_directories(out_dir);
  const std::string dir = out_dir + "/";
  io::write_trajectory_csv(dir + "ground_truth.csv", gt.samples);
  io::write_odometry_csv(dir + "odometry.csv", odometry);
  io::write_rtt_csv(dir + "rtt.csv", rtt);
  io::write_text(dir + "scenario.json",
                 cfg::scenario_to_json(fc.scenario).dump(2) + "\n");

  std::printf("samples=%zu path_length=%s odometry=%zu rtt=%zu -> %s\n",
              gt.samples.size(), io::format_num(gt.path_length).c_str(),
              odometry.size(), rtt.size(), out_dir.c_str());
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& preset,
             const std::string& out_dir) {
  cfg::FileConfig fc = load_or_default(config_path, preset);
  fc.eval.out_dir = out_dir;
  const auto report = eval::run_experiment(fc.eval);
  std::cout << report.summary_text;
  for (const auto& r : report.runs) {
    if (r.failed) return 1;
  }
  return 0;
}

int cmd_run(const std::string& mode, const std::string& config_path,
            const std::string& preset, const std::string& out_dir,
            bool closed_loop, uint64_t stall_begin_ms, uint64_t stall_end_ms) {
  cfg::FileConfig fc = load_or_default(config_path, preset);

  live::EdgeRunResult edge_result;
  robot::SessionStats robot_stats;

  if (mode == "loopback") {
    net::StallWindow stall{stall_begin_ms * 1000, stall_end_ms * 1000};
    auto result = live::run_loopback(fc, closed_loop, stall);
    edge_result = std::move(result.edge);
    robot_stats = result.robot_stats;
  } else if (mode == "sockets") {
    net::TcpListener listener("127.0.0.1", 0);
    const int port = listener.port();
    std::thread edge_thread([&] {
      auto stream = listener.accept_one();
      edge_result = live::run_edge_live(*stream, fc, closed_loop, true);
    });
    auto stream = net::TcpStream::connect("127.0.0.1", port);
    const sim::Scenario s = sim::build_scenario(fc.scenario);
    if (closed_loop) {
      const auto& wp = fc.scenario.waypoints;
      robot::RobotSession session(
          s,
          Pose2(wp[0].x, wp[0].y,
                std::atan2(wp[1].y - wp[0].y, wp[1].x - wp[0].x)),
          fc.robot);
      robot_stats = session.run(*stream);
    } else {
      const auto gt = sim::sample_ground_truth(s);
      robot::RobotSession session(
          s, sim::synthesize_imu(gt, s.cfg.imu_noise, s.cfg.seed),
          sim::synthesize_rtt(gt, s, s.cfg.rtt_noise, s.cfg.seed), fc.robot);
      robot_stats = session.run(*stream);
    }
    edge_thread.join();
  } else {
    std::fprintf(stderr, "unknown mode: %s\n", mode.c_str());
    return 2;
  }

  std::cout << robot_stats.summary();
  std::printf("edge: keyframes=%zu solves=%zu gaps=%llu\n",
              edge_result.keyframes, edge_result.solve_log.size(),
              (unsigned long long)edge_result.counters.seq_gaps);
  if (!out_dir.empty()) live::write_edge_outputs(out_dir, edge_result);
  return (robot_stats.aborted || edge_result.aborted) ? 1 : 0;
}

int cmd_robot(const std::string& config_path, const std::string& connect,
              bool closed_loop) {
  cfg::FileConfig fc = load_or_default(config_path, "");
  const auto [host, port] = net::parse_addr(connect);
  auto stream = net::TcpStream::connect(host, port);
  const sim::Scenario s = sim::build_scenario(fc.scenario);

  robot::SessionStats stats;
  if (closed_loop) {
    const auto& wp = fc.scenario.waypoints;
    robot::RobotSession session(
        s,
        Pose2(wp[0].x, wp[0].y,
              std::atan2(wp[1].y - wp[0].y, wp[1].x - wp[0].x)),
        fc.robot);
    stats = session.run(*stream);
  } else {
    const auto gt = sim::sample_ground_truth(s);
    robot::RobotSession session(
        s, sim::synthesize_imu(gt, s.cfg.imu_noise, s.cfg.seed),
        sim::synthesize_rtt(gt, s, s.cfg.rtt_noise, s.cfg.seed), fc.robot);
    stats = session.run(*stream);
  }
  std::cout << stats.summary();
  return stats.aborted ? 1 : 0;
}

int cmd_edge(const std::string& config_path, const std::string& listen,
             const std::string& out_dir, bool planner) {
  cfg::FileConfig fc = load_or_default(config_path, "");
  const auto [host, port] = net::parse_addr(listen);
  net::TcpListener listener(host, port);
  std::printf("listening on %s:%d\n", host.c_str(), listener.port());
  std::fflush(stdout);
  auto stream = listener.accept_one();
  auto result = live::run_edge_live(*stream, fc, planner, false);
  if (!out_dir.empty()) live::write_edge_outputs(out_dir, result);
  std::printf("keyframes=%zu solves=%zu aborted=%d\n", result.keyframes,
              result.solve_log.size(), result.aborted ? 1 : 0);
  return result.aborted ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edge-offloaded robot control: simulator, protocol, SLAM, metrics"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir, mode = "loopback", connect, listen;
  uint64_t seed = 0;
  bool closed_loop = false, planner = false;
  uint64_t stall_begin_ms = 0, stall_end_ms = 0;

  auto* sim_cmd = app.add_subcommand("simulate", "generate ground truth + sensor streams");
  sim_cmd->add_option("--config", config_path, "scenario config file (JSON)");
  sim_cmd->add_option("--preset", preset, "built-in preset: exp1|exp2");
  sim_cmd->add_option("--seed", seed, "noise seed");
  sim_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "run the seeds x methods experiment");
  eval_cmd->add_option("--config", config_path, "experiment config file (JSON)");
  eval_cmd->add_option("--preset", preset, "built-in preset: exp1|exp2");
  eval_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* run_cmd = app.add_subcommand("run", "robot + edge session");
  run_cmd->add_option("--mode", mode, "loopback|sockets")->required();
  run_cmd->add_option("--config", config_path, "config file (JSON)");
  run_cmd->add_option("--preset", preset, "built-in preset: exp1|exp2");
  run_cmd->add_option("--out", out_dir, "edge output directory");
  run_cmd->add_flag("--closed-loop", closed_loop, "commands drive the robot");
  run_cmd->add_option("--stall-begin-ms", stall_begin_ms, "loopback stall window start");
  run_cmd->add_option("--stall-end-ms", stall_end_ms, "loopback stall window end");

  auto* robot_cmd = app.add_subcommand("robot", "robot node, connects to an edge");
  robot_cmd->add_option("--config", config_path, "config file (JSON)");
  robot_cmd->add_option("--connect", connect, "edge address host:port")->required();
  robot_cmd->add_flag("--closed-loop", closed_loop, "commands drive the robot");

  auto* edge_cmd = app.add_subcommand("edge", "edge controller, accepts one robot");
  edge_cmd->add_option("--config", config_path, "config file (JSON)");
  edge_cmd->add_option("--listen", listen, "bind address host:port")->required();
  edge_cmd->add_option("--out", out_dir, "output directory");
  edge_cmd->add_flag("--planner", planner, "plan commands toward the waypoints");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) return cmd_simulate(config_path, preset, seed, out_dir);
    if (eval_cmd->parsed()) return cmd_eval(config_path, preset, out_dir);
    if (run_cmd->parsed())
      return cmd_run(mode, config_path, preset, out_dir, closed_loop,
                     stall_begin_ms, stall_end_ms);
    if (robot_cmd->parsed()) return cmd_robot(config_path, connect, closed_loop);
    if (edge_cmd->parsed()) return cmd_edge(config_path, listen, out_dir, planner);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
