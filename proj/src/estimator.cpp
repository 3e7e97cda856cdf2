#include "edgebot/estimator.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

namespace edgebot::est {

namespace {

Eigen::Matrix2d rot(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d m;
  m << c, -s, s, c;
  return m;
}

Eigen::Matrix3d to_eigen(const Mat3Sym& m) {
  Eigen::Matrix3d out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out(r, c) = m(r, c);
  return out;
}

double edge_phi(const LoopEdge& e, const SolverConfig& cfg) {
  return e.phi > 0.0 ? e.phi : cfg.phi;
}

}  // namespace

Pose2 pdr_integrate(const Pose2& pose, double dd, double dtheta) {
  const double mid = pose.theta.rad() + 0.5 * dtheta;
  return Pose2(pose.x + dd * std::cos(mid), pose.y + dd * std::sin(mid),
               pose.theta.rad() + dtheta);
}

Pose2 pdr_increment(double dd, double dtheta) {
  const double half = 0.5 * dtheta;
  return Pose2(dd * std::cos(half), dd * std::sin(half), dtheta);
}

std::optional<double> fingerprint_distance(const Fingerprint& a,
                                           const Fingerprint& b, int min_aps) {
  const size_t n = std::min(a.ranges.size(), b.ranges.size());
  int co = 0;
  double ss = 0.0;
  for (size_t k = 0; k < n; ++k) {
    if (a.ranges[k] && b.ranges[k]) {
      const double d = *a.ranges[k] - *b.ranges[k];
      ss += d * d;
      ++co;
    }
  }
  if (co < min_aps) return std::nullopt;
  return std::sqrt(ss / co);
}

void OdomAccumulator::add(double dd, double dtheta, double dt) {
  delta = compose(delta, pdr_increment(dd, dtheta));
  dist += std::abs(dd);
  abs_rot += std::abs(dtheta);
  duration += dt;
  ++count;
}

void OdomAccumulator::reset() { *this = OdomAccumulator{}; }

std::pair<KeyframeNode, OdomEdge> make_keyframe(
    const KeyframeNode& prev, const OdomAccumulator& acc, Fingerprint fp,
    Timestamp t, double missing_duration_s, double nominal_duration_s,
    const KeyframeCovConfig& cov) {
  double var_t = cov.floor_var + cov.trans_var_per_m * acc.dist;
  double var_r = cov.floor_var + cov.rot_var_per_rad * acc.abs_rot +
                 cov.rot_var_per_s * (acc.duration + missing_duration_s);
  if (missing_duration_s > 0.0 && nominal_duration_s > 0.0) {
    const double gap_factor = 1.0 + missing_duration_s / nominal_duration_s;
    var_t *= gap_factor;
    var_r *= gap_factor;
  }

  KeyframeNode node;
  node.id = prev.id + 1;
  node.pose = compose(prev.pose, acc.delta);
  node.fingerprint = std::move(fp);
  node.t = t;

  OdomEdge edge;
  edge.i = prev.id;
  edge.j = node.id;
  edge.delta = acc.delta;
  edge.info = Mat3Sym::diagonal(1.0 / var_t, 1.0 / var_t, 1.0 / var_r);
  return {node, edge};
}

bool LoopDetector::suppressed(int i, int j) const {
  const int w = std::max(1, cfg_.suppression_window);
  for (int bi = i / w - 1; bi <= i / w + 1; ++bi) {
    if (bi < 0) continue;
    for (int bj = j / w - 1; bj <= j / w + 1; ++bj) {
      if (bj < 0) continue;
      auto it = grid_.find((static_cast<uint64_t>(bi) << 32) |
                           static_cast<uint32_t>(bj));
      if (it == grid_.end()) continue;
      for (const auto& [pi, pj] : it->second) {
        if (std::abs(i - pi) <= w && std::abs(j - pj) <= w) return true;
      }
    }
  }
  return false;
}

void LoopDetector::remember(int i, int j) {
  const int w = std::max(1, cfg_.suppression_window);
  const uint64_t key =
      (static_cast<uint64_t>(i / w) << 32) | static_cast<uint32_t>(j / w);
  grid_[key].emplace_back(i, j);
}

std::vector<LoopEdge> LoopDetector::add_node(
    std::span<const KeyframeNode> nodes) {
  std::vector<LoopEdge> accepted;
  const int j = static_cast<int>(nodes.size()) - 1;
  if (j < 0) return accepted;
  for (int i = 0; i + cfg_.min_separation <= j; ++i) {
    if (suppressed(i, j)) continue;
    const auto d = fingerprint_distance(nodes[i].fingerprint,
                                        nodes[j].fingerprint,
                                        cfg_.min_aps_for_match);
    if (!d || *d > cfg_.match_threshold) continue;
    accepted.push_back({i, j, cfg_.sigma_lc, cfg_.phi, 1.0});
    remember(i, j);
  }
  return accepted;
}

std::vector<LoopEdge> detect_loop_closures(std::span<const KeyframeNode> nodes,
                                           const LoopDetectConfig& cfg) {
  LoopDetector det(cfg);
  std::vector<LoopEdge> edges;
  for (size_t j = 1; j <= nodes.size(); ++j) {
    auto accepted = det.add_node(nodes.first(j));
    edges.insert(edges.end(), accepted.begin(), accepted.end());
  }
  return edges;
}

double dcs_weight(double chi2, double phi) {
  return std::min(1.0, 2.0 * phi / (phi + chi2));
}

OdomResidual residual_odom(const OdomEdge& e, const Pose2& xi,
                           const Pose2& xj) {
  const double ti = xi.theta.rad();
  const double td = e.delta.theta.rad();
  const Eigen::Matrix2d rd_t = rot(td).transpose();
  const Eigen::Matrix2d a_t = rot(ti + td).transpose();
  const Eigen::Vector2d u(xj.x - xi.x, xj.y - xi.y);
  const Eigen::Vector2d t_m = rot(ti).transpose() * u;

  OdomResidual out;
  out.r.head<2>() = rd_t * (t_m - Eigen::Vector2d(e.delta.x, e.delta.y));
  out.r(2) = wrap_angle(xj.theta.rad() - ti - td);

  // d/dtheta_i of R(ti)^T
  Eigen::Matrix2d drt;
  drt << -std::sin(ti), std::cos(ti), -std::cos(ti), -std::sin(ti);

  out.j_i.setZero();
  out.j_i.block<2, 2>(0, 0) = -a_t;
  out.j_i.block<2, 1>(0, 2) = rd_t * (drt * u);
  out.j_i(2, 2) = -1.0;

  out.j_j.setZero();
  out.j_j.block<2, 2>(0, 0) = a_t;
  out.j_j(2, 2) = 1.0;
  return out;
}

LoopResidual residual_loop(const LoopEdge& e, const Pose2& xi,
                           const Pose2& xj) {
  const double inv_sigma = 1.0 / e.sigma_lc;
  LoopResidual out;
  out.r = Eigen::Vector2d(xj.x - xi.x, xj.y - xi.y) * inv_sigma;
  out.j_i.setZero();
  out.j_i(0, 0) = -inv_sigma;
  out.j_i(1, 1) = -inv_sigma;
  out.j_j.setZero();
  out.j_j(0, 0) = inv_sigma;
  out.j_j(1, 1) = inv_sigma;
  return out;
}

namespace {

void check_graph(const PoseGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  if (n == 0) throw std::invalid_argument("optimize: empty graph");
  if (static_cast<int>(g.odom_edges.size()) != n - 1) {
    throw std::invalid_argument("optimize: odometry chain incomplete");
  }
  for (int k = 0; k < n - 1; ++k) {
    if (g.odom_edges[k].i != k || g.odom_edges[k].j != k + 1) {
      throw std::invalid_argument("optimize: odometry edges must chain 0..N-1");
    }
  }
  for (const auto& e : g.loop_edges) {
    if (e.i < 0 || e.j >= n || e.i >= e.j) {
      throw std::invalid_argument("optimize: bad loop edge endpoints");
    }
  }
  if (g.anchor_id < 0 || g.anchor_id >= n) {
    throw std::invalid_argument("optimize: anchor outside graph");
  }
}

double objective(const PoseGraph& g, const std::vector<Pose2>& x,
                 const SolverConfig& cfg, std::vector<double>* weights) {
  double chi2 = 0.0;
  for (const auto& e : g.odom_edges) {
    const auto res = residual_odom(e, x[e.i], x[e.j]);
    chi2 += res.r.dot(to_eigen(e.info) * res.r);
  }
  if (weights) weights->clear();
  for (const auto& e : g.loop_edges) {
    const auto res = residual_loop(e, x[e.i], x[e.j]);
    const double c = res.r.squaredNorm();
    const double w = cfg.robust ? dcs_weight(c, edge_phi(e, cfg)) : 1.0;
    chi2 += w * c;
    if (weights) weights->push_back(w);
  }
  return chi2;
}

// The least-squares objective the scaled system actually solves: loop
// residuals carry the iteration's frozen weights. Monotone acceptance
// against this is what makes LM termination certain.
double frozen_objective(const PoseGraph& g, const std::vector<Pose2>& x,
                        const std::vector<double>& w) {
  double chi2 = 0.0;
  for (const auto& e : g.odom_edges) {
    const auto res = residual_odom(e, x[e.i], x[e.j]);
    chi2 += res.r.dot(to_eigen(e.info) * res.r);
  }
  for (size_t k = 0; k < g.loop_edges.size(); ++k) {
    const auto& e = g.loop_edges[k];
    const auto res = residual_loop(e, x[e.i], x[e.j]);
    chi2 += w[k] * w[k] * res.r.squaredNorm();
  }
  return chi2;
}

}  // namespace

double graph_chi2(const PoseGraph& graph, const SolverConfig& cfg) {
  std::vector<Pose2> x;
  x.reserve(graph.nodes.size());
  for (const auto& n : graph.nodes) x.push_back(n.pose);
  return objective(graph, x, cfg, nullptr);
}

SolveStats optimize(PoseGraph& graph, const SolverConfig& cfg) {
  check_graph(graph);
  const int n = static_cast<int>(graph.nodes.size());

  // Variable layout: 3 per node, anchor excluded.
  std::vector<int> var_of(n, -1);
  int dim = 0;
  for (int k = 0; k < n; ++k) {
    if (k != graph.anchor_id) {
      var_of[k] = dim;
      dim += 3;
    }
  }

  std::vector<Pose2> x;
  x.reserve(n);
  for (const auto& node : graph.nodes) x.push_back(node.pose);

  SolveStats stats;
  double chi2 = objective(graph, x, cfg, &stats.loop_weights);
  stats.initial_chi2 = chi2;
  stats.final_chi2 = chi2;
  stats.status = SolveStatus::MaxIterations;

  auto write_back = [&]() {
    for (int k = 0; k < n; ++k) graph.nodes[k].pose = x[k];
    objective(graph, x, cfg, &stats.loop_weights);
    for (size_t e = 0; e < graph.loop_edges.size(); ++e) {
      graph.loop_edges[e].weight = stats.loop_weights[e];
    }
    stats.final_chi2 = chi2;
  };

  if (dim == 0) {  // single anchored node
    stats.status = SolveStatus::Converged;
    write_back();
    return stats;
  }

  double lambda = cfg.lambda_init;
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> frozen_w(graph.loop_edges.size(), 1.0);
  Eigen::SparseMatrix<double> h(dim, dim);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  bool pattern_ready = false;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    stats.iterations = iter + 1;

    // Linearize at the current iterate. Loop-edge residuals and Jacobians
    // are scaled by the DCS weight recomputed here, so the edge's effective
    // information carries w^2. The weights stay frozen for this iteration.
    triplets.clear();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    auto add_block = [&](int vi, int vj, const Eigen::Matrix3d& blk) {
      if (vi < 0 || vj < 0) return;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          triplets.emplace_back(vi + r, vj + c, blk(r, c));
    };

    for (const auto& e : graph.odom_edges) {
      const auto res = residual_odom(e, x[e.i], x[e.j]);
      const Eigen::Matrix3d omega = to_eigen(e.info);
      const int vi = var_of[e.i];
      const int vj = var_of[e.j];
      const Eigen::Matrix3d jit_w = res.j_i.transpose() * omega;
      const Eigen::Matrix3d jjt_w = res.j_j.transpose() * omega;
      add_block(vi, vi, jit_w * res.j_i);
      add_block(vi, vj, jit_w * res.j_j);
      add_block(vj, vi, jjt_w * res.j_i);
      add_block(vj, vj, jjt_w * res.j_j);
      if (vi >= 0) grad.segment<3>(vi) += jit_w * res.r;
      if (vj >= 0) grad.segment<3>(vj) += jjt_w * res.r;
    }
    for (size_t le = 0; le < graph.loop_edges.size(); ++le) {
      const auto& e = graph.loop_edges[le];
      const auto res = residual_loop(e, x[e.i], x[e.j]);
      const double c = res.r.squaredNorm();
      const double w = cfg.robust ? dcs_weight(c, edge_phi(e, cfg)) : 1.0;
      frozen_w[le] = w;
      const double w2 = w * w;
      const int vi = var_of[e.i];
      const int vj = var_of[e.j];
      add_block(vi, vi, w2 * res.j_i.transpose() * res.j_i);
      add_block(vi, vj, w2 * res.j_i.transpose() * res.j_j);
      add_block(vj, vi, w2 * res.j_j.transpose() * res.j_i);
      add_block(vj, vj, w2 * res.j_j.transpose() * res.j_j);
      if (vi >= 0) grad.segment<3>(vi) += w2 * res.j_i.transpose() * res.r;
      if (vj >= 0) grad.segment<3>(vj) += w2 * res.j_j.transpose() * res.r;
    }

    if (grad.lpNorm<Eigen::Infinity>() < 1e-12) {
      stats.status = SolveStatus::Converged;
      break;
    }

    for (int k = 0; k < dim; ++k) triplets.emplace_back(k, k, 0.0);
    h.setFromTriplets(triplets.begin(), triplets.end());
    const Eigen::VectorXd diag = h.diagonal();

    if (!pattern_ready) {
      solver.analyzePattern(h);
      pattern_ready = true;
    }

    // Inner lambda loop: retry the same linearization with more damping
    // until a step decreases this iteration's weighted chi2.
    const double frozen_before = frozen_objective(graph, x, frozen_w);
    while (true) {
      for (int k = 0; k < dim; ++k) {
        h.coeffRef(k, k) = diag(k) + lambda * std::max(diag(k), 1e-12);
      }
      solver.factorize(h);
      bool ok = solver.info() == Eigen::Success;
      Eigen::VectorXd dx;
      if (ok) {
        dx = solver.solve(-grad);
        ok = dx.allFinite();
      }
      if (ok) {
        std::vector<Pose2> cand = x;
        for (int k = 0; k < n; ++k) {
          const int v = var_of[k];
          if (v < 0) continue;
          cand[k] = Pose2(x[k].x + dx(v), x[k].y + dx(v + 1),
                          x[k].theta.rad() + dx(v + 2));
        }
        const double frozen_cand = frozen_objective(graph, cand, frozen_w);
        if (frozen_cand < frozen_before) {
          const double rel =
              (frozen_before - frozen_cand) / std::max(frozen_before, 1e-300);
          x = std::move(cand);
          chi2 = objective(graph, x, cfg, nullptr);
          stats.iteration_chi2.push_back(frozen_cand);
          lambda *= 0.5;
          if (rel < cfg.rel_tol) stats.status = SolveStatus::Converged;
          break;
        }
        if (dx.lpNorm<Eigen::Infinity>() < 1e-15) {
          // Numerically at a stationary point; nothing left to gain.
          stats.status = SolveStatus::Converged;
          break;
        }
      }
      lambda *= 4.0;
      if (lambda > cfg.lambda_max) {
        write_back();
        throw SolverDiverged(stats);
      }
    }
    if (stats.status == SolveStatus::Converged) break;
  }

  write_back();
  return stats;
}

void dump_graph(std::ostream& os, const PoseGraph& graph) {
  char buf[512];
  for (const auto& node : graph.nodes) {
    std::snprintf(buf, sizeof(buf), "NODE %d %.17g %.17g %.17g\n", node.id,
                  node.pose.x, node.pose.y, node.pose.theta.rad());
    os << buf;
  }
  for (const auto& e : graph.odom_edges) {
    int len = std::snprintf(buf, sizeof(buf), "EDGE_ODOM %d %d %.17g %.17g %.17g",
                            e.i, e.j, e.delta.x, e.delta.y, e.delta.theta.rad());
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        len += std::snprintf(buf + len, sizeof(buf) - len, " %.17g", e.info(r, c));
      }
    }
    os << buf << "\n";
  }
  for (const auto& e : graph.loop_edges) {
    std::snprintf(buf, sizeof(buf), "EDGE_LOOP %d %d %.17g %.17g\n", e.i, e.j,
                  e.sigma_lc, e.phi);
    os << buf;
  }
}

}  // namespace edgebot::est
