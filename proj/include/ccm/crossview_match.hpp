#pragma once

// Cross-camera cluster matching: Mahalanobis cluster-to-cluster costs and a
// minimum-cost bipartite assignment with exactly min(n_p, n_q) matches.
//
// Determinism: among equal-cost optima the solver returns the matching whose
// sorted (i, j) pair list is lexicographically smallest. This is done by
// solving the LAP once with a shortest-augmenting-path solver, extracting the
// tight-edge (zero reduced cost) graph from the dual potentials, and greedily
// matching rows in ascending order to the smallest feasible column.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ccm/core.hpp"
#include "ccm/intra_cluster.hpp"

namespace ccm {

// Quadratic-form distance (a-b)^T M (a-b), clamped at zero to absorb
// round-off when M is positive semidefinite.
inline double mahalanobis_distance(const Vec& a, const Vec& b, const Mat& metric) {
  if (a.size() != b.size())
    throw std::invalid_argument("mahalanobis_distance: vector dimension mismatch");
  if (metric.rows() != metric.cols() || metric.rows() != a.size())
    throw std::invalid_argument("mahalanobis_distance: metric dimension mismatch");
  const Vec diff = a - b;
  const double v = diff.dot(metric * diff);
  return v > 0.0 ? v : 0.0;
}

// Cluster-to-cluster cost: the smallest pairwise distance between members.
// arg_p/arg_q record the witness sample indices attaining each minimum
// (first minimal pair in member-major order).
struct CostMatrix {
  int cam_p = -1, cam_q = -1;
  Mat cost;                      // n_p x n_q
  Eigen::MatrixXi arg_p, arg_q;  // witness sample indices per entry
};

inline CostMatrix cluster_cost_matrix(const ClusterSet& cp, const ClusterSet& cq,
                                      const std::vector<Vec>& features_p,
                                      const std::vector<Vec>& features_q,
                                      const Mat& metric) {
  const int np = cp.num_clusters();
  const int nq = cq.num_clusters();
  if (np < 1 || nq < 1)
    throw std::invalid_argument("cluster_cost_matrix: empty cluster set");
  CostMatrix out;
  out.cam_p = cp.camera_id;
  out.cam_q = cq.camera_id;
  out.cost.resize(np, nq);
  out.arg_p.resize(np, nq);
  out.arg_q.resize(np, nq);
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < nq; ++j) {
      double best = std::numeric_limits<double>::infinity();
      int bp = -1, bq = -1;
      for (int a : cp.clusters[static_cast<std::size_t>(i)]) {
        if (a < 0 || a >= static_cast<int>(features_p.size()))
          throw std::invalid_argument("cluster_cost_matrix: member index out of range");
        for (int b : cq.clusters[static_cast<std::size_t>(j)]) {
          if (b < 0 || b >= static_cast<int>(features_q.size()))
            throw std::invalid_argument("cluster_cost_matrix: member index out of range");
          const double d = mahalanobis_distance(features_p[static_cast<std::size_t>(a)],
                                                features_q[static_cast<std::size_t>(b)],
                                                metric);
          if (d < best) {
            best = d;
            bp = a;
            bq = b;
          }
        }
      }
      out.cost(i, j) = best;
      out.arg_p(i, j) = bp;
      out.arg_q(i, j) = bq;
    }
  }
  return out;
}

namespace detail {

// Shortest-augmenting-path LAP on a square matrix (O(n^3)), returning the
// row->col matching and the dual potentials (u, v) with
// cost(i,j) - u[i] - v[j] >= 0 and equality on matched edges.
struct LapResult {
  std::vector<int> row_to_col;
  std::vector<double> u, v;
};

inline LapResult solve_lap_square(const Mat& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  LapResult r;
  r.row_to_col.assign(static_cast<std::size_t>(n), -1);
  r.u.assign(static_cast<std::size_t>(n), 0.0);
  r.v.assign(static_cast<std::size_t>(n), 0.0);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] != 0)
      r.row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
  for (int i = 1; i <= n; ++i) r.u[static_cast<std::size_t>(i - 1)] = u[static_cast<std::size_t>(i)];
  for (int j = 1; j <= n; ++j) r.v[static_cast<std::size_t>(j - 1)] = v[static_cast<std::size_t>(j)];
  return r;
}

// Rewires the tight-edge matching so each row, in ascending order, holds the
// smallest column that still extends to a perfect matching. `adj` lists each
// row's tight columns in ascending order.
class LexicographicMatcher {
 public:
  LexicographicMatcher(const std::vector<std::vector<int>>& adj,
                       std::vector<int> row_to_col)
      : adj_(adj), match_row_(std::move(row_to_col)) {
    const int n = static_cast<int>(match_row_.size());
    match_col_.assign(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i)
      match_col_[static_cast<std::size_t>(match_row_[static_cast<std::size_t>(i)])] = i;
    fixed_col_.assign(static_cast<std::size_t>(n), 0);
    visited_.assign(static_cast<std::size_t>(n), 0);
  }

  std::vector<int> run() {
    const int n = static_cast<int>(match_row_.size());
    for (int i = 0; i < n; ++i) {
      for (int c : adj_[static_cast<std::size_t>(i)]) {
        if (fixed_col_[static_cast<std::size_t>(c)]) continue;
        if (try_take(i, c)) break;  // always true once c reaches i's own column
      }
      fixed_col_[static_cast<std::size_t>(match_row_[static_cast<std::size_t>(i)])] = 1;
    }
    return match_row_;
  }

 private:
  // Attempts to give column c to row i, re-matching the displaced row within
  // the unfixed part of the graph. Leaves the matching unchanged on failure.
  bool try_take(int i, int c) {
    const int old = match_row_[static_cast<std::size_t>(i)];
    if (old == c) return true;
    const int displaced = match_col_[static_cast<std::size_t>(c)];
    match_row_[static_cast<std::size_t>(i)] = c;
    match_col_[static_cast<std::size_t>(c)] = i;
    match_row_[static_cast<std::size_t>(displaced)] = -1;
    match_col_[static_cast<std::size_t>(old)] = -1;
    std::fill(visited_.begin(), visited_.end(), 0);
    // Column c is spoken for: the displaced row's augmenting path must not
    // steal it back, or row i silently loses the column it just claimed.
    visited_[static_cast<std::size_t>(c)] = 1;
    if (augment(displaced)) return true;
    match_row_[static_cast<std::size_t>(i)] = old;
    match_col_[static_cast<std::size_t>(old)] = i;
    match_row_[static_cast<std::size_t>(displaced)] = c;
    match_col_[static_cast<std::size_t>(c)] = displaced;
    return false;
  }

  bool augment(int row) {
    for (int c : adj_[static_cast<std::size_t>(row)]) {
      if (fixed_col_[static_cast<std::size_t>(c)] || visited_[static_cast<std::size_t>(c)])
        continue;
      visited_[static_cast<std::size_t>(c)] = 1;
      const int owner = match_col_[static_cast<std::size_t>(c)];
      if (owner == -1 || augment(owner)) {
        match_row_[static_cast<std::size_t>(row)] = c;
        match_col_[static_cast<std::size_t>(c)] = row;
        return true;
      }
    }
    return false;
  }

  const std::vector<std::vector<int>>& adj_;
  std::vector<int> match_row_;
  std::vector<int> match_col_;
  std::vector<char> fixed_col_;
  std::vector<char> visited_;
};

}  // namespace detail

// Binary assignment between the clusters of two cameras; row/column sums are
// at most one and exactly min(n_p, n_q) entries are set.
struct AssignmentMatrix {
  int cam_p = -1, cam_q = -1;
  BinaryMat x;  // n_p x n_q
};

inline AssignmentMatrix solve_assignment(const CostMatrix& costs) {
  const int np = static_cast<int>(costs.cost.rows());
  const int nq = static_cast<int>(costs.cost.cols());
  if (np < 1 || nq < 1)
    throw std::invalid_argument("solve_assignment: empty cost matrix");
  if (!costs.cost.allFinite())
    throw std::invalid_argument("solve_assignment: costs must be finite");

  // Pad to square with zero-cost dummies; dummy rows/columns sit at high
  // indices so the greedy pass prefers real columns.
  const int n = std::max(np, nq);
  Mat padded = Mat::Zero(n, n);
  padded.topLeftCorner(np, nq) = costs.cost;

  const detail::LapResult lap = detail::solve_lap_square(padded);

  const double tol = 1e-9 * (1.0 + costs.cost.cwiseAbs().maxCoeff());
  std::vector<std::vector<int>> tight(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (padded(i, j) - lap.u[static_cast<std::size_t>(i)] -
              lap.v[static_cast<std::size_t>(j)] <=
          tol)
        tight[static_cast<std::size_t>(i)].push_back(j);

  detail::LexicographicMatcher matcher(tight, lap.row_to_col);
  const std::vector<int> row_to_col = matcher.run();

  AssignmentMatrix out;
  out.cam_p = costs.cam_p;
  out.cam_q = costs.cam_q;
  out.x = BinaryMat::Zero(np, nq);
  for (int i = 0; i < np; ++i) {
    const int j = row_to_col[static_cast<std::size_t>(i)];
    if (j < nq) out.x(i, j) = 1;
  }
  return out;
}

// Total cost of the selected entries (the assignment objective G).
inline double assignment_objective(const Mat& cost, const BinaryMat& x) {
  if (cost.rows() != x.rows() || cost.cols() != x.cols())
    throw std::invalid_argument("assignment_objective: shape mismatch");
  double total = 0.0;
  for (int i = 0; i < cost.rows(); ++i)
    for (int j = 0; j < cost.cols(); ++j)
      if (x(i, j) != 0) total += cost(i, j);
  return total;
}

}  // namespace ccm
