#pragma once

// Experiment orchestration: per-(seed, method) pipeline runs, the paper's
// metrics, false-positive closure injection for the traditional baseline,
// and artifact emission (CSVs, SVG overlay, summary table).

#include <string>
#include <vector>

#include "edgebot/edge.hpp"
#include "edgebot/estimator.hpp"
#include "edgebot/metrics.hpp"
#include "edgebot/sim.hpp"

namespace edgebot::eval {

struct MetricsReport {
  std::string method;
  double rmse = 0.0;
  double p90 = 0.0;
  double endpoint = 0.0;
  double path_length = 0.0;
  std::vector<std::pair<double, double>> cdf;
};

// Deliberate false-positive closures, injected per run as clusters of
// consecutive-pair edges between genuinely distant trajectory regions.
struct FalseLoopConfig {
  int clusters = 3;
  int cluster_size = 5;
  double min_distance_m = 4.0;   // true spatial separation of the stapled pair
};

struct ExperimentConfig {
  sim::ScenarioConfig scenario;
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<std::string> methods = {"pdr", "traditional", "robust"};
  std::string out_dir;  // empty: compute only, write nothing
  FalseLoopConfig false_loops;
  est::LoopDetectConfig loop;
  est::KeyframeCovConfig cov;
  est::SolverConfig solver;
  // Keyframes between progressive solves. Mirrors the online edge schedule:
  // solving as the graph grows keeps each solve's init close, so genuine
  // long-span closures never look like outliers to the robust kernel.
  int solve_cadence_kf = 40;
};

struct RunResult {
  std::string method;
  uint64_t seed = 0;
  MetricsReport metrics;
  est::SolveStats solve;  // default for pdr
  bool failed = false;
  std::string error;
};

struct MethodAggregate {
  std::string method;
  double median_rmse = 0.0;
  double mean_rmse = 0.0;
  double median_p90 = 0.0;
  double median_endpoint = 0.0;
};

struct ExperimentReport {
  std::vector<RunResult> runs;
  std::vector<MethodAggregate> aggregates;
  double gt_path_length = 0.0;
  std::string summary_text;
};

// One seed's shared front end: sensor synthesis, keyframe graph with
// PDR-initialized poses, detected closures, injected false positives.
struct SeedGraph {
  est::PoseGraph graph;                    // odometry chain + loop edges
  std::vector<sim::TimedPose> pdr;         // node poses before any solve
  size_t natural_loops = 0;
  size_t injected_loops = 0;
};

SeedGraph build_seed_graph(const sim::Scenario& s,
                           const sim::GroundTruthTrajectory& gt, uint64_t seed,
                           const ExperimentConfig& cfg);

// Picks cluster base pairs (i, j) with at least 2x the detector separation
// and true spatial distance >= min_distance_m; deterministic per seed.
std::vector<est::LoopEdge> make_false_loops(
    const est::PoseGraph& graph, const sim::GroundTruthTrajectory& gt,
    uint64_t seed, const FalseLoopConfig& fl, const est::LoopDetectConfig& ld);

// Solves the graph on growing time prefixes every cadence keyframes (new
// nodes re-initialized from the solved base via their odometry deltas),
// then a final full-graph solve. Updates poses and loop weights in place
// and returns the final solve's stats.
est::SolveStats progressive_solve(est::PoseGraph& graph,
                                  const est::SolverConfig& solver,
                                  int cadence);

double median(std::vector<double> xs);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

}  // namespace edgebot::eval
