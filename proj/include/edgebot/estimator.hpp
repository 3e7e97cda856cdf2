#pragma once

// Localization core: PDR integration, RTT-fingerprint loop-closure detection,
// and robust 2D pose-graph optimization (Levenberg-Marquardt with Dynamic
// Covariance Scaling on loop edges).

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "edgebot/geometry.hpp"

namespace edgebot::est {

// Dead-reckoning step: heading advances by dtheta, position advances dd
// along the mean heading theta + dtheta/2.
Pose2 pdr_integrate(const Pose2& pose, double dd, double dtheta);

// The SE(2) element equivalent to one PDR step; composing these equals
// iterating pdr_integrate.
Pose2 pdr_increment(double dd, double dtheta);

// Per-AP latest range within one RTT epoch window; missing slots excluded
// from matching.
struct Fingerprint {
  std::vector<std::optional<double>> ranges;
  Timestamp t;
};

// RMS range difference over co-present APs; nullopt (incomparable) when
// fewer than min_aps are co-present.
std::optional<double> fingerprint_distance(const Fingerprint& a,
                                           const Fingerprint& b, int min_aps);

struct KeyframeNode {
  int id = 0;
  Pose2 pose;  // estimate, initialized from PDR
  Fingerprint fingerprint;
  Timestamp t;
};

struct OdomEdge {
  int i = 0;
  int j = 0;      // j == i + 1
  Pose2 delta;    // composed PDR increments between the keyframes
  Mat3Sym info;   // positive definite
};

// Same-place hypothesis: measured relative position (0,0), heading free.
struct LoopEdge {
  int i = 0;
  int j = 0;  // j - i >= min_separation
  double sigma_lc = 0.5;  // m
  double phi = 1.0;       // DCS parameter
  double weight = 1.0;    // current robust weight, in (0,1]
};

struct PoseGraph {
  std::vector<KeyframeNode> nodes;
  std::vector<OdomEdge> odom_edges;
  std::vector<LoopEdge> loop_edges;
  int anchor_id = 0;  // gauge anchor, held fixed
};

// Diagonal odometry-edge covariance model: translation variance grows with
// distance, rotation variance with |dtheta| and elapsed time; both floored.
// A reported sensing gap widens the whole covariance proportionally.
struct KeyframeCovConfig {
  double floor_var = 1e-4;        // m^2 / rad^2
  double trans_var_per_m = 4e-4;  // m^2 per meter traveled
  double rot_var_per_rad = 1e-3;  // rad^2 per rad turned
  double rot_var_per_s = 1e-4;    // rad^2 per second elapsed
};

struct OdomAccumulator {
  Pose2 delta;
  double dist = 0.0;      // sum |dd|, m
  double abs_rot = 0.0;   // sum |dtheta|, rad
  double duration = 0.0;  // seconds of odometry actually received
  int count = 0;

  void add(double dd, double dtheta, double dt);
  void reset();
};

// Builds the next keyframe and its odometry edge. missing_duration_s is the
// sensing time lost to dropped frames within the interval (0 if none);
// nominal_duration_s is the full interval length.
std::pair<KeyframeNode, OdomEdge> make_keyframe(
    const KeyframeNode& prev, const OdomAccumulator& acc, Fingerprint fp,
    Timestamp t, double missing_duration_s, double nominal_duration_s,
    const KeyframeCovConfig& cov);

struct LoopDetectConfig {
  int min_separation = 50;       // keyframes (10 s at 5 Hz)
  double match_threshold = 0.8;  // m, on fingerprint RMS distance
  double sigma_lc = 0.5;         // m
  double phi = 1.0;
  int suppression_window = 10;   // keyframes
  int min_aps_for_match = 3;
};

// Exhaustive pairwise fingerprint matching with a temporal separation gate;
// pairs already bridged by an accepted edge within the suppression window
// are skipped. O(N^2), fine at desk scale.
std::vector<LoopEdge> detect_loop_closures(std::span<const KeyframeNode> nodes,
                                           const LoopDetectConfig& cfg);

// Incremental form of the same detector: feed nodes as keyframes appear.
// Batch detection over a node span yields exactly the same edge set.
class LoopDetector {
 public:
  explicit LoopDetector(LoopDetectConfig cfg) : cfg_(cfg) {}

  // Considers pairs (i, j) for the newest node j == nodes.size()-1 and
  // returns the accepted new edges.
  std::vector<LoopEdge> add_node(std::span<const KeyframeNode> nodes);

 private:
  bool suppressed(int i, int j) const;
  void remember(int i, int j);

  LoopDetectConfig cfg_;
  std::unordered_map<uint64_t, std::vector<std::pair<int, int>>> grid_;
};

// w = min(1, 2*phi / (phi + chi2)).
double dcs_weight(double chi2, double phi);

struct OdomResidual {
  Eigen::Vector3d r;   // angle component wrapped
  Eigen::Matrix3d j_i;
  Eigen::Matrix3d j_j;
};

struct LoopResidual {
  Eigen::Vector2d r;   // whitened by sigma_lc
  Eigen::Matrix<double, 2, 3> j_i;
  Eigen::Matrix<double, 2, 3> j_j;
};

OdomResidual residual_odom(const OdomEdge& e, const Pose2& xi, const Pose2& xj);
LoopResidual residual_loop(const LoopEdge& e, const Pose2& xi, const Pose2& xj);

struct SolverConfig {
  int max_iters = 50;
  double lambda_init = 1e-4;
  double rel_tol = 1e-8;   // on relative chi2 decrease
  double phi = 1.0;        // used for edges that carry no phi of their own
  bool robust = true;      // off reproduces the traditional-SLAM baseline
  double lambda_max = 1e8;
};

enum class SolveStatus { Converged, MaxIterations };

struct SolveStats {
  double initial_chi2 = 0.0;
  double final_chi2 = 0.0;
  int iterations = 0;
  std::vector<double> loop_weights;  // aligned with graph.loop_edges
  // Weighted chi2 after each accepted step, evaluated with that iteration's
  // weights; every accepted step strictly decreased it against the same
  // iteration's pre-step value (with constant weights the sequence itself
  // is monotone).
  std::vector<double> iteration_chi2;
  SolveStatus status = SolveStatus::Converged;
};

// Normal equations stayed singular after lambda escalation past lambda_max.
// The graph keeps the best accepted poses; stats are partial.
struct SolverDiverged : std::runtime_error {
  explicit SolverDiverged(SolveStats s)
      : std::runtime_error("pose-graph solver diverged"), stats(std::move(s)) {}
  SolveStats stats;
};

// Levenberg-Marquardt on the weighted chi2
//   sum r_o' Omega r_o  +  sum w(chi2_l) * chi2_l
// with DCS weights recomputed from the current iterate each iteration
// (robust on) or identically 1 (robust off). The anchor node is clamped.
SolveStats optimize(PoseGraph& graph, const SolverConfig& cfg);

// Total weighted chi2 of the graph at its current poses.
double graph_chi2(const PoseGraph& graph, const SolverConfig& cfg);

// Text dump: NODE / EDGE_ODOM / EDGE_LOOP records, one per line.
void dump_graph(std::ostream& os, const PoseGraph& graph);

}  // namespace edgebot::est
