#include "edgebot/config.hpp"

#include <fstream>
#include <stdexcept>

namespace edgebot::cfg {

using nlohmann::json;

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  json j;
  is >> j;
  return j;
}

namespace {

std::vector<Vec2> points_from_json(const json& j) {
  std::vector<Vec2> out;
  for (const auto& p : j) {
    out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  return out;
}

json points_to_json(const std::vector<Vec2>& pts) {
  json j = json::array();
  for (const auto& p : pts) j.push_back({p.x, p.y});
  return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void noise_from_json(const json& j, sim::ImuNoiseModel& imu,
                     sim::RttNoiseModel& rtt) {
  maybe(j, "gyro_bias", imu.gyro_bias);
  maybe(j, "gyro_sigma", imu.gyro_sigma);
  maybe(j, "odom_scale_err", imu.odom_scale_err);
  maybe(j, "odom_sigma", imu.odom_sigma);
  maybe(j, "range_sigma", rtt.range_sigma);
  maybe(j, "multipath_prob", rtt.multipath_prob);
  maybe(j, "multipath_bias_mean", rtt.multipath_bias_mean);
  maybe(j, "dropout_prob", rtt.dropout_prob);
}

}  // namespace

sim::ScenarioConfig scenario_from_json(const json& j) {
  sim::ScenarioConfig c;
  if (j.is_string()) {
    return sim::preset_scenario(j.get<std::string>());
  }
  if (j.contains("preset")) {
    c = sim::preset_scenario(j.at("preset").get<std::string>());
  }
  if (j.contains("area")) {
    c.area_w = j.at("area").at(0).get<double>();
    c.area_h = j.at("area").at(1).get<double>();
  }
  if (j.contains("waypoints")) c.waypoints = points_from_json(j.at("waypoints"));
  maybe(j, "speed", c.speed);
  maybe(j, "imu_rate", c.imu_rate);
  maybe(j, "rtt_rate", c.rtt_rate);
  if (j.contains("aps")) c.aps = points_from_json(j.at("aps"));
  if (j.contains("noise")) noise_from_json(j.at("noise"), c.imu_noise, c.rtt_noise);
  maybe(j, "seed", c.seed);
  return c;
}

json scenario_to_json(const sim::ScenarioConfig& c) {
  json j;
  j["area"] = {c.area_w, c.area_h};
  j["waypoints"] = points_to_json(c.waypoints);
  j["speed"] = c.speed;
  j["imu_rate"] = c.imu_rate;
  j["rtt_rate"] = c.rtt_rate;
  j["aps"] = points_to_json(c.aps);
  j["noise"] = {{"gyro_bias", c.imu_noise.gyro_bias},
                {"gyro_sigma", c.imu_noise.gyro_sigma},
                {"odom_scale_err", c.imu_noise.odom_scale_err},
                {"odom_sigma", c.imu_noise.odom_sigma},
                {"range_sigma", c.rtt_noise.range_sigma},
                {"multipath_prob", c.rtt_noise.multipath_prob},
                {"multipath_bias_mean", c.rtt_noise.multipath_bias_mean},
                {"dropout_prob", c.rtt_noise.dropout_prob}};
  j["seed"] = c.seed;
  return j;
}

FileConfig config_from_json(const json& j) {
  FileConfig fc;
  if (j.contains("scenario")) {
    fc.scenario = scenario_from_json(j.at("scenario"));
  } else {
    fc.scenario = sim::preset_scenario("exp1");
  }

  if (j.contains("robot")) {
    const auto& r = j.at("robot");
    maybe(r, "tx_buffer_frames", fc.robot.tx_buffer_frames);
    maybe(r, "imu_batch", fc.robot.imu_batch);
    maybe(r, "heartbeat_period_s", fc.robot.heartbeat_period_s);
    maybe(r, "closed_loop_duration_s", fc.robot.closed_loop_duration_s);
  }

  if (j.contains("edge")) {
    const auto& e = j.at("edge");
    if (e.contains("scheduler")) {
      const auto& s = e.at("scheduler");
      maybe(s, "keyframe_on_rtt_epoch", fc.edge.scheduler.keyframe_on_rtt_epoch);
      maybe(s, "solve_every_k", fc.edge.scheduler.solve_every_k);
      maybe(s, "command_period_ms", fc.edge.scheduler.command_period_ms);
    }
    if (e.contains("planner")) {
      const auto& p = e.at("planner");
      maybe(p, "k_v", fc.edge.planner.k_v);
      maybe(p, "k_omega", fc.edge.planner.k_omega);
      maybe(p, "v_max", fc.edge.planner.v_max);
      maybe(p, "omega_max", fc.edge.planner.omega_max);
      maybe(p, "capture_radius", fc.edge.planner.capture_radius);
    }
    if (e.contains("covariance")) {
      const auto& c = e.at("covariance");
      maybe(c, "floor_var", fc.edge.cov.floor_var);
      maybe(c, "trans_var_per_m", fc.edge.cov.trans_var_per_m);
      maybe(c, "rot_var_per_rad", fc.edge.cov.rot_var_per_rad);
      maybe(c, "rot_var_per_s", fc.edge.cov.rot_var_per_s);
    }
    if (e.contains("loop")) {
      const auto& l = e.at("loop");
      maybe(l, "min_separation", fc.edge.loop.min_separation);
      maybe(l, "match_threshold", fc.edge.loop.match_threshold);
      maybe(l, "sigma_lc", fc.edge.loop.sigma_lc);
      maybe(l, "phi", fc.edge.loop.phi);
      maybe(l, "suppression_window", fc.edge.loop.suppression_window);
      maybe(l, "min_aps_for_match", fc.edge.loop.min_aps_for_match);
    }
    if (e.contains("solver")) {
      const auto& s = e.at("solver");
      maybe(s, "max_iters", fc.edge.solver.max_iters);
      maybe(s, "lambda_init", fc.edge.solver.lambda_init);
      maybe(s, "rel_tol", fc.edge.solver.rel_tol);
      maybe(s, "phi", fc.edge.solver.phi);
      maybe(s, "robust", fc.edge.solver.robust);
    }
  }

  fc.eval.scenario = fc.scenario;
  fc.eval.loop = fc.edge.loop;
  fc.eval.cov = fc.edge.cov;
  fc.eval.solver = fc.edge.solver;
  if (j.contains("eval")) {
    const auto& ev = j.at("eval");
    maybe(ev, "seeds", fc.eval.seeds);
    maybe(ev, "methods", fc.eval.methods);
    if (ev.contains("false_loops")) {
      const auto& fl = ev.at("false_loops");
      maybe(fl, "clusters", fc.eval.false_loops.clusters);
      maybe(fl, "cluster_size", fc.eval.false_loops.cluster_size);
      maybe(fl, "min_distance_m", fc.eval.false_loops.min_distance_m);
    }
  }
  return fc;
}

FileConfig load_config_file(const std::string& path) {
  return config_from_json(load_json_file(path));
}

FileConfig default_config(std::string_view preset) {
  json j;
  j["scenario"] = std::string(preset);
  return config_from_json(j);
}

}  // namespace edgebot::cfg
