#pragma once

// The 4-node out-and-back toy graph used by the solver oracle and
// robustness tests. True poses: n0 (0,0,0) -> n1 (2.5,0,0) -> n2 (5,0,pi)
// -> n3 (0,0,pi); n3 revisits the start, so (0,3) is a true loop closure,
// and n2 sits 5 m away from n0, so (0,2) is a gross false one.

#include "edgebot/estimator.hpp"
#include "oracles.hpp"

namespace toy {

using edgebot::Mat3Sym;
using edgebot::Pose2;
using edgebot::kPi;

inline constexpr double kSigmaT = 0.16;  // odometry translation sigma, m
inline constexpr double kSigmaR = 0.05;  // odometry rotation sigma, rad
inline constexpr double kSigmaLoop = 0.5;

inline edgebot::est::PoseGraph make_graph(bool with_true_loop = true) {
  using namespace edgebot::est;
  // measured odometry, perturbed from the true relative motions
  const Pose2 deltas[3] = {
      Pose2(2.55, 0.02, 0.01),
      Pose2(2.47, -0.01, kPi + 0.02),
      Pose2(5.08, 0.03, -0.015),
  };
  const double info_t = 1.0 / (kSigmaT * kSigmaT);
  const double info_r = 1.0 / (kSigmaR * kSigmaR);

  PoseGraph g;
  KeyframeNode node;
  node.id = 0;
  node.pose = Pose2(0, 0, 0);
  node.t = edgebot::Timestamp{0};
  g.nodes.push_back(node);
  for (int k = 0; k < 3; ++k) {
    KeyframeNode next;
    next.id = k + 1;
    next.pose = compose(g.nodes.back().pose, deltas[k]);
    next.t = edgebot::Timestamp{static_cast<uint64_t>(k + 1) * 1000000};
    g.nodes.push_back(next);
    g.odom_edges.push_back(
        {k, k + 1, deltas[k], Mat3Sym::diagonal(info_t, info_t, info_r)});
  }
  if (with_true_loop) {
    g.loop_edges.push_back({0, 3, kSigmaLoop, 1.0, 1.0});
  }
  return g;
}

inline edgebot::est::LoopEdge false_loop() {
  return {0, 2, kSigmaLoop, 1.0, 1.0};  // n2 is truly 5 m from n0
}

// The same graph in the dense oracle's independent representation.
inline oracle::DenseGraph to_oracle(const edgebot::est::PoseGraph& g) {
  oracle::DenseGraph og;
  for (const auto& n : g.nodes) {
    og.poses.push_back({n.pose.x, n.pose.y, n.pose.theta.rad()});
  }
  for (const auto& e : g.odom_edges) {
    og.odom.push_back({e.i, e.j,
                       {e.delta.x, e.delta.y, e.delta.theta.rad()},
                       e.info(0, 0), e.info(2, 2)});
  }
  for (const auto& e : g.loop_edges) {
    og.loops.push_back({e.i, e.j, e.sigma_lc});
  }
  return og;
}

}  // namespace toy
