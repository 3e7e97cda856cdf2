#pragma once

// Independent oracles for the test suites. Deliberately share no code with
// the implementation: SE(2) via homogeneous 3x3 matrices, CRC-32 as the
// bitwise loop, angle wrap via fmod, and a dense Gauss-Newton pose-graph
// solver with finite-difference Jacobians and hand-rolled elimination.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// ---- angle wrap (mod arithmetic) ----

inline double wrap(double a) {
  double r = std::fmod(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

// ---- SE(2) via homogeneous matrices ----

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Mat3 se2_matrix(double x, double y, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {{{c, -s, x}, {s, c, y}, {0, 0, 1}}};
}

inline Mat3 mat_mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

// Rigid-motion inverse: R^T, -R^T t.
inline Mat3 mat_inv(const Mat3& m) {
  Mat3 r{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r[i][j] = m[j][i];
  r[0][2] = -(r[0][0] * m[0][2] + r[0][1] * m[1][2]);
  r[1][2] = -(r[1][0] * m[0][2] + r[1][1] * m[1][2]);
  r[2][2] = 1;
  return r;
}

struct Se2 {
  double x, y, theta;
};

inline Se2 from_matrix(const Mat3& m) {
  return {m[0][2], m[1][2], std::atan2(m[1][0], m[0][0])};
}

inline Se2 compose(const Se2& a, const Se2& b) {
  return from_matrix(
      mat_mul(se2_matrix(a.x, a.y, a.theta), se2_matrix(b.x, b.y, b.theta)));
}

inline Se2 inverse(const Se2& p) {
  return from_matrix(mat_inv(se2_matrix(p.x, p.y, p.theta)));
}

inline Se2 between(const Se2& a, const Se2& b) {
  return from_matrix(mat_mul(mat_inv(se2_matrix(a.x, a.y, a.theta)),
                             se2_matrix(b.x, b.y, b.theta)));
}

// ---- reference CRC-32 (bitwise, reflected 0xEDB88320) ----

inline uint32_t crc32_reference(std::span<const uint8_t> bytes) {
  uint32_t crc = 0xFFFFFFFFu;
  for (uint8_t b : bytes) {
    crc ^= b;
    for (int k = 0; k < 8; ++k) {
      crc = (crc >> 1) ^ (0xEDB88320u & (~(crc & 1u) + 1u));
    }
  }
  return ~crc;
}

// ---- dense Gauss-Newton pose-graph oracle ----
//
// Graph model mirrors the spec text, re-derived: odometry edges with a 3x3
// diagonal information matrix, loop edges as position-only constraints
// whitened by sigma. Numeric central-difference Jacobians, dense normal
// equations, Gaussian elimination, anchor excluded from the variables.

struct OrOdomEdge {
  int i, j;
  Se2 delta;
  double info_t, info_r;  // diagonal information
};

struct OrLoopEdge {
  int i, j;
  double sigma;
};

struct DenseGraph {
  std::vector<Se2> poses;  // node 0 anchored
  std::vector<OrOdomEdge> odom;
  std::vector<OrLoopEdge> loops;
};

inline std::vector<double> odom_residual(const DenseGraph& g, const OrOdomEdge& e) {
  const Se2 m = between(g.poses[e.i], g.poses[e.j]);
  const Se2 r = compose(inverse(e.delta), m);
  return {r.x, r.y, wrap(r.theta)};
}

inline std::vector<double> loop_residual(const DenseGraph& g, const OrLoopEdge& e) {
  return {(g.poses[e.j].x - g.poses[e.i].x) / e.sigma,
          (g.poses[e.j].y - g.poses[e.i].y) / e.sigma};
}

inline double dense_chi2(const DenseGraph& g) {
  double c = 0;
  for (const auto& e : g.odom) {
    const auto r = odom_residual(g, e);
    c += e.info_t * (r[0] * r[0] + r[1] * r[1]) + e.info_r * r[2] * r[2];
  }
  for (const auto& e : g.loops) {
    const auto r = loop_residual(g, e);
    c += r[0] * r[0] + r[1] * r[1];
  }
  return c;
}

inline bool gaussian_solve(std::vector<std::vector<double>> a,
                           std::vector<double> b, std::vector<double>& x) {
  const int n = static_cast<int>(b.size());
  x.assign(n, 0.0);
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int r = k + 1; r < n; ++r) {
      if (std::fabs(a[r][k]) > std::fabs(a[piv][k])) piv = r;
    }
    if (std::fabs(a[piv][k]) < 1e-14) return false;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (int r = k + 1; r < n; ++r) {
      const double f = a[r][k] / a[k][k];
      for (int c = k; c < n; ++c) a[r][c] -= f * a[k][c];
      b[r] -= f * b[k];
    }
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return true;
}

// Damped Gauss-Newton iterated to convergence; step halving keeps chi2
// monotone. Returns the optimized poses.
inline std::vector<Se2> dense_solve(DenseGraph g, int max_iters = 400) {
  const int n = static_cast<int>(g.poses.size());
  const int dim = 3 * (n - 1);  // node 0 fixed
  auto var = [](int node) { return 3 * (node - 1); };

  auto perturb = [&](DenseGraph& gg, int node, int comp, double h) {
    if (comp == 0) gg.poses[node].x += h;
    if (comp == 1) gg.poses[node].y += h;
    if (comp == 2) gg.poses[node].theta += h;
  };

  for (int iter = 0; iter < max_iters; ++iter) {
    std::vector<std::vector<double>> h(dim, std::vector<double>(dim, 0.0));
    std::vector<double> grad(dim, 0.0);
    const double eps = 1e-7;

    auto accumulate = [&](const std::vector<double>& r,
                          const std::vector<double>& w,
                          const std::vector<std::vector<double>>& jac,
                          const std::vector<int>& cols) {
      const size_t rows = r.size();
      for (size_t a_ = 0; a_ < cols.size(); ++a_) {
        if (cols[a_] < 0) continue;
        for (size_t b_ = 0; b_ < cols.size(); ++b_) {
          if (cols[b_] < 0) continue;
          double acc = 0;
          for (size_t k = 0; k < rows; ++k)
            acc += jac[k][a_] * w[k] * jac[k][b_];
          h[cols[a_]][cols[b_]] += acc;
        }
        double gacc = 0;
        for (size_t k = 0; k < rows; ++k) gacc += jac[k][a_] * w[k] * r[k];
        grad[cols[a_]] += gacc;
      }
    };

    auto edge_terms = [&](auto residual_fn, int i, int j, size_t rows,
                          const std::vector<double>& w) {
      const auto r0 = residual_fn(g);
      std::vector<std::vector<double>> jac(rows, std::vector<double>(6, 0.0));
      const int nodes[2] = {i, j};
      for (int which = 0; which < 2; ++which) {
        for (int comp = 0; comp < 3; ++comp) {
          DenseGraph gp = g;
          perturb(gp, nodes[which], comp, eps);
          DenseGraph gm = g;
          perturb(gm, nodes[which], comp, -eps);
          const auto rp = residual_fn(gp);
          const auto rm = residual_fn(gm);
          for (size_t k = 0; k < rows; ++k) {
            double d = rp[k] - rm[k];
            if (rows == 3 && k == 2) d = wrap(d);  // angle row
            jac[k][3 * which + comp] = d / (2 * eps);
          }
        }
      }
      std::vector<int> cols = {i == 0 ? -1 : var(i),     i == 0 ? -1 : var(i) + 1,
                               i == 0 ? -1 : var(i) + 2, j == 0 ? -1 : var(j),
                               j == 0 ? -1 : var(j) + 1, j == 0 ? -1 : var(j) + 2};
      // Re-pack 6 jacobian columns against 6 variable columns.
      std::vector<std::vector<double>> jc(rows, std::vector<double>(6));
      for (size_t k = 0; k < rows; ++k)
        for (int c = 0; c < 6; ++c) jc[k][c] = jac[k][c];
      accumulate(r0, w, jc, cols);
    };

    for (const auto& e : g.odom) {
      edge_terms([&](const DenseGraph& gg) { return odom_residual(gg, e); },
                 e.i, e.j, 3, {e.info_t, e.info_t, e.info_r});
    }
    for (const auto& e : g.loops) {
      edge_terms([&](const DenseGraph& gg) { return loop_residual(gg, e); },
                 e.i, e.j, 2, {1.0, 1.0});
    }

    for (int k = 0; k < dim; ++k) h[k][k] += 1e-9;  // tiny regularization
    std::vector<double> rhs(dim);
    for (int k = 0; k < dim; ++k) rhs[k] = -grad[k];
    std::vector<double> dx;
    if (!gaussian_solve(h, rhs, dx)) break;

    const double before = dense_chi2(g);
    double scale = 1.0;
    DenseGraph best = g;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      DenseGraph cand = g;
      for (int node = 1; node < n; ++node) {
        cand.poses[node].x += scale * dx[var(node)];
        cand.poses[node].y += scale * dx[var(node) + 1];
        cand.poses[node].theta =
            wrap(cand.poses[node].theta + scale * dx[var(node) + 2]);
      }
      if (dense_chi2(cand) < before) {
        best = cand;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) break;
    g = best;
    double max_step = 0;
    for (double v : dx) max_step = std::max(max_step, std::fabs(scale * v));
    if (max_step < 1e-13) break;
  }
  return g.poses;
}

}  // namespace oracle
