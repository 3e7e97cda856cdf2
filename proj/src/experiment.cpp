#include "edgebot/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <stdexcept>

#include "edgebot/io.hpp"

namespace edgebot::eval {

namespace {

edge::PipelineConfig batch_pipeline_config(const sim::Scenario& s,
                                           const sim::GroundTruthTrajectory& gt,
                                           const ExperimentConfig& cfg) {
  edge::PipelineConfig pc;
  pc.start_pose = gt.samples.front().pose;
  pc.num_aps = s.cfg.aps.size();
  pc.tick_us = s.tick_us;
  pc.epoch_us = s.epoch_us;
  pc.cov = cfg.cov;
  pc.loop = cfg.loop;
  pc.solver = cfg.solver;
  pc.online = false;  // the evaluation runs the solver on graph copies
  return pc;
}

std::vector<sim::TimedPose> graph_trajectory(const est::PoseGraph& g) {
  std::vector<sim::TimedPose> out;
  out.reserve(g.nodes.size());
  for (const auto& n : g.nodes) out.push_back({n.t, n.pose});
  return out;
}

MetricsReport compute_metrics(const std::string& method,
                              std::span<const sim::TimedPose> traj,
                              const sim::GroundTruthTrajectory& gt) {
  const ErrorSeries es = error_series(traj, gt);
  MetricsReport m;
  m.method = method;
  m.rmse = rmse(es);
  m.p90 = percentile(es, 0.9);
  m.endpoint = es.e.back();
  m.path_length = gt.path_length;
  m.cdf = cdf(es);
  return m;
}

}  // namespace

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median: empty");
  std::sort(xs.begin(), xs.end());
  const size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::vector<est::LoopEdge> make_false_loops(
    const est::PoseGraph& graph, const sim::GroundTruthTrajectory& gt,
    uint64_t seed, const FalseLoopConfig& fl, const est::LoopDetectConfig& ld) {
  std::vector<est::LoopEdge> out;
  const int n = static_cast<int>(graph.nodes.size());
  const int cluster = std::max(1, fl.cluster_size);
  const int min_span = 2 * ld.min_separation;
  if (n <= min_span + cluster) return out;

  auto true_pos = [&](int node) {
    const uint64_t idx = graph.nodes[node].t.micros / gt.tick_us;
    return gt.samples[idx].pose.position();
  };

  std::mt19937_64 rng(sim::derive_seed(seed, 0xFA15E));
  std::uniform_int_distribution<int> pick(0, n - 1 - cluster);
  for (int c = 0; c < fl.clusters; ++c) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      int i = pick(rng);
      int j = pick(rng);
      if (i > j) std::swap(i, j);
      if (j - i < min_span) continue;
      if (distance(true_pos(i), true_pos(j)) < fl.min_distance_m) continue;
      for (int k = 0; k < cluster; ++k) {
        out.push_back({i + k, j + k, ld.sigma_lc, ld.phi, 1.0});
      }
      break;
    }
  }
  return out;
}

est::SolveStats progressive_solve(est::PoseGraph& graph,
                                  const est::SolverConfig& solver,
                                  int cadence) {
  const int n = static_cast<int>(graph.nodes.size());
  if (cadence < 1) cadence = n;

  // Loop edges replayed in discovery order (ascending j).
  std::vector<est::LoopEdge> loops = graph.loop_edges;
  std::stable_sort(loops.begin(), loops.end(),
                   [](const est::LoopEdge& a, const est::LoopEdge& b) {
                     return a.j < b.j;
                   });

  est::PoseGraph prefix;
  prefix.anchor_id = graph.anchor_id;
  prefix.nodes.push_back(graph.nodes.front());
  prefix.nodes.front().fingerprint = {};
  size_t loop_idx = 0;
  est::SolveStats last;

  for (int end = std::min(cadence, n - 1);;
       end = std::min(end + cadence, n - 1)) {
    while (static_cast<int>(prefix.nodes.size()) <= end) {
      const int k = static_cast<int>(prefix.nodes.size());
      const auto& edge = graph.odom_edges[k - 1];
      est::KeyframeNode node;
      node.id = k;
      node.t = graph.nodes[k].t;
      node.pose = compose(prefix.nodes.back().pose, edge.delta);
      prefix.nodes.push_back(std::move(node));
      prefix.odom_edges.push_back(edge);
    }
    while (loop_idx < loops.size() && loops[loop_idx].j <= end) {
      prefix.loop_edges.push_back(loops[loop_idx++]);
    }
    last = est::optimize(prefix, solver);
    if (end == n - 1) break;
  }

  for (int k = 0; k < n; ++k) graph.nodes[k].pose = prefix.nodes[k].pose;
  graph.loop_edges = std::move(prefix.loop_edges);
  return last;
}

SeedGraph build_seed_graph(const sim::Scenario& s,
                           const sim::GroundTruthTrajectory& gt, uint64_t seed,
                           const ExperimentConfig& cfg) {
  const auto odometry = sim::synthesize_imu(gt, s.cfg.imu_noise, seed);
  const auto rtt = sim::synthesize_rtt(gt, s, s.cfg.rtt_noise, seed);

  edge::EdgePipeline pipeline(batch_pipeline_config(s, gt, cfg));
  // Merge the two streams by timestamp; odometry first on ties, matching the
  // robot's emission order on the wire.
  size_t oi = 0, ri = 0;
  while (oi < odometry.size() || ri < rtt.size()) {
    const bool take_odom =
        ri >= rtt.size() ||
        (oi < odometry.size() && odometry[oi].t <= rtt[ri].t);
    if (take_odom) {
      const auto& od = odometry[oi++];
      pipeline.on_odometry(od.t, od.dd, od.dtheta);
    } else {
      const auto& rs = rtt[ri++];
      pipeline.on_rtt(rs.t, rs.ap_id, rs.range);
    }
  }
  pipeline.finish();

  SeedGraph sg;
  sg.graph = pipeline.graph();
  sg.pdr = graph_trajectory(sg.graph);

  auto natural = est::detect_loop_closures(sg.graph.nodes, cfg.loop);
  sg.natural_loops = natural.size();
  sg.graph.loop_edges = std::move(natural);

  auto injected =
      make_false_loops(sg.graph, gt, seed, cfg.false_loops, cfg.loop);
  sg.injected_loops = injected.size();
  sg.graph.loop_edges.insert(sg.graph.loop_edges.end(), injected.begin(),
                             injected.end());
  return sg;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty() || cfg.methods.empty()) {
    throw std::invalid_argument("run_experiment: need >= 1 seed and method");
  }
  const sim::Scenario scenario = sim::build_scenario(cfg.scenario);
  const sim::GroundTruthTrajectory gt = sim::sample_ground_truth(scenario);

  ExperimentReport report;
  report.gt_path_length = gt.path_length;

  // First-seed trajectories are kept for the overlay plot and CSVs.
  std::map<std::string, std::vector<sim::TimedPose>> first_traj;
  std::map<std::string, std::vector<double>> pooled_errors;

  for (const uint64_t seed : cfg.seeds) {
    SeedGraph sg = build_seed_graph(scenario, gt, seed, cfg);

    for (const std::string& method : cfg.methods) {
      RunResult run;
      run.method = method;
      run.seed = seed;
      try {
        std::vector<sim::TimedPose> traj;
        if (method == "pdr") {
          traj = sg.pdr;
        } else if (method == "traditional" || method == "robust") {
          est::PoseGraph g = sg.graph;
          est::SolverConfig sc = cfg.solver;
          sc.robust = (method == "robust");
          try {
            run.solve = progressive_solve(g, sc, cfg.solve_cadence_kf);
          } catch (const est::SolverDiverged& ex) {
            run.solve = ex.stats;
            run.failed = true;
            run.error = "solver diverged";
          }
          traj = graph_trajectory(g);
        } else {
          throw std::invalid_argument("unknown method: " + method);
        }
        run.metrics = compute_metrics(method, traj, gt);
        const ErrorSeries es = error_series(traj, gt);
        auto& pool = pooled_errors[method];
        pool.insert(pool.end(), es.e.begin(), es.e.end());
        if (seed == cfg.seeds.front()) {
          first_traj[method] = std::move(traj);
        }
      } catch (const std::exception& ex) {
        run.failed = true;
        run.error = ex.what();
      }
      report.runs.push_back(std::move(run));
    }
  }

  // Aggregates (successful runs only).
  for (const std::string& method : cfg.methods) {
    std::vector<double> rmses, p90s, endpoints;
    for (const auto& r : report.runs) {
      if (r.method != method || r.failed) continue;
      rmses.push_back(r.metrics.rmse);
      p90s.push_back(r.metrics.p90);
      endpoints.push_back(r.metrics.endpoint);
    }
    if (rmses.empty()) continue;
    MethodAggregate agg;
    agg.method = method;
    agg.median_rmse = median(rmses);
    agg.mean_rmse = 0.0;
    for (double v : rmses) agg.mean_rmse += v;
    agg.mean_rmse /= static_cast<double>(rmses.size());
    agg.median_p90 = median(p90s);
    agg.median_endpoint = median(endpoints);
    report.aggregates.push_back(agg);
  }

  // Summary table.
  {
    std::string s;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "area: %g x %g m, path length: %s m, aps: %zu\n",
                  cfg.scenario.area_w, cfg.scenario.area_h,
                  io::format_num(gt.path_length).c_str(),
                  cfg.scenario.aps.size());
    s += buf;
    std::snprintf(buf, sizeof(buf), "seeds: %zu  methods:", cfg.seeds.size());
    s += buf;
    for (const auto& m : cfg.methods) s += " " + m;
    s += "\n\nmethod        median_rmse  mean_rmse  median_p90  median_endpoint\n";
    for (const auto& a : report.aggregates) {
      std::snprintf(buf, sizeof(buf), "%-12s  %11.3f  %9.3f  %10.3f  %15.3f\n",
                    a.method.c_str(), a.median_rmse, a.mean_rmse, a.median_p90,
                    a.median_endpoint);
      s += buf;
    }
    const auto find = [&](const std::string& m) -> const MethodAggregate* {
      for (const auto& a : report.aggregates)
        if (a.method == m) return &a;
      return nullptr;
    };
    const auto* robust = find("robust");
    if (robust && robust->median_p90 > 0) {
      for (const char* base : {"pdr", "traditional"}) {
        if (const auto* b = find(base)) {
          std::snprintf(buf, sizeof(buf),
                        "p90 enhancement vs %s ((baseline-proposed)/proposed): "
                        "%.0f%%\n",
                        base,
                        100.0 * (b->median_p90 - robust->median_p90) /
                            robust->median_p90);
          s += buf;
        }
      }
    }
    size_t failures = 0;
    for (const auto& r : report.runs) {
      if (!r.failed) continue;
      ++failures;
      std::snprintf(buf, sizeof(buf), "FAILED %s seed %llu: %s\n",
                    r.method.c_str(), (unsigned long long)r.seed,
                    r.error.c_str());
      s += buf;
    }
    if (failures == 0) s += "failures: none\n";
    report.summary_text = s;
  }

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string dir = cfg.out_dir + "/";

    io::write_trajectory_csv(dir + "trajectory_gt.csv", gt.samples);
    for (const auto& [method, traj] : first_traj) {
      io::write_trajectory_csv(dir + "trajectory_" + method + ".csv", traj);
    }

    {
      std::string s = "method,seed,rmse,p90,endpoint\n";
      for (const auto& r : report.runs) {
        if (r.failed) continue;
        s += r.method + "," + std::to_string(r.seed) + "," +
             io::format_num(r.metrics.rmse) + "," +
             io::format_num(r.metrics.p90) + "," +
             io::format_num(r.metrics.endpoint) + "\n";
      }
      io::write_text(dir + "metrics.csv", s);
    }

    for (auto& [method, pool] : pooled_errors) {
      ErrorSeries es;
      es.e = pool;
      es.t.assign(pool.size(), Timestamp{0});
      const auto c = cdf(es);
      io::write_cdf_csv(dir + "cdf_" + method + ".csv", c);
    }

    {
      static const std::map<std::string, std::string> kColors = {
          {"gt", "#777777"},
          {"pdr", "#d62728"},
          {"traditional", "#ff7f0e"},
          {"robust", "#2ca02c"}};
      std::vector<io::SvgSeries> series;
      series.push_back({"ground truth", kColors.at("gt"), gt.samples});
      for (const auto& [method, traj] : first_traj) {
        series.push_back({method, kColors.at(method), traj});
      }
      io::write_overlay_svg(dir + "overlay.svg", cfg.scenario.area_w,
                            cfg.scenario.area_h, cfg.scenario.aps, series);
    }

    io::write_text(dir + "summary.txt", report.summary_text);
  }
  return report;
}

}  // namespace edgebot::eval
