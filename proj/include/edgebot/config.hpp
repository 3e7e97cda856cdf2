#pragma once

// JSON config loading: scenario presets with overrides, robot/edge knobs,
// experiment descriptions. Documented key names: area, waypoints, speed,
// imu_rate, rtt_rate, aps, noise.*, seed.

#include <string>
#include <string_view>

#include <json.hpp>

#include "edgebot/edge.hpp"
#include "edgebot/experiment.hpp"
#include "edgebot/robot.hpp"
#include "edgebot/sim.hpp"

namespace edgebot::cfg {

struct EdgeConfig {
  edge::SchedulerConfig scheduler;
  edge::PlannerConfig planner;
  est::KeyframeCovConfig cov;
  est::LoopDetectConfig loop;
  est::SolverConfig solver;
};

struct FileConfig {
  sim::ScenarioConfig scenario;
  robot::RobotConfig robot;
  EdgeConfig edge;
  eval::ExperimentConfig eval;  // scenario/loop/cov/solver mirrored in
};

nlohmann::json load_json_file(const std::string& path);

// Scenario from JSON: either a full object, or {"preset": "exp1", ...partial
// overrides}. Individual noise.* keys may be overridden alone.
sim::ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const sim::ScenarioConfig& c);

// Whole config file; every section is optional and defaults apply.
FileConfig config_from_json(const nlohmann::json& j);
FileConfig load_config_file(const std::string& path);
FileConfig default_config(std::string_view preset);

}  // namespace edgebot::cfg
