#pragma once

// Pairwise Mahalanobis metric learning on cluster-level match decisions.
// Each (cluster_p, cluster_q) candidate contributes a log-logistic loss on
// its representative distance relative to the mean positive-pair distance;
// classes are inversely weighted by their counts. The metric is optimized by
// accelerated projected gradient descent with backtracking line search and a
// monotone safeguard; feasibility (positive semidefiniteness) is enforced by
// eigenvalue clamping after every step.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccm/core.hpp"
#include "ccm/crossview_match.hpp"

namespace ccm {

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// How match labels enter the loss: signed maps {match, non-match} to {+1, -1};
// binary maps them to {1, 0} (non-matches then contribute a constant).
enum class LossLabelMode { kSigned, kBinary };

// Loss of one candidate pair: log(1 + exp(s * (distance - margin))) with
// s = +1 for matches and -1 for non-matches.
inline double pair_loss(double distance, double margin, int label) {
  if (label != 1 && label != -1)
    throw std::invalid_argument("pair_loss: label must be +1 or -1");
  return softplus(static_cast<double>(label) * (distance - margin));
}

// {1, 0} label variant: non-matches (0) contribute the constant log 2.
inline double pair_loss_binary(double distance, double margin, int indicator) {
  if (indicator != 0 && indicator != 1)
    throw std::invalid_argument("pair_loss_binary: indicator must be 0 or 1");
  if (indicator == 0) return std::log(2.0);
  return softplus(distance - margin);
}

// One training example: representative member difference of a cluster pair,
// labeled +1 (consistent match) or -1.
struct PairExample {
  int i = -1, j = -1;  // cluster indices
  int label = 0;       // +1 / -1
  Vec delta;           // feature difference of the witness member pair
};

struct PairTrainingSet {
  int cam_p = -1, cam_q = -1;
  std::vector<PairExample> examples;
  int n_pos = 0, n_neg = 0;
  double margin = 0.0;  // mean positive-pair distance under the frozen metric
};

// Builds the training set for one camera pair from the cost matrix computed
// under the previous metric (whose argmin witnesses become the frozen
// representatives) and the consistency-filtered match set.
inline PairTrainingSet build_training_set(const CostMatrix& costs,
                                          const std::vector<Vec>& features_p,
                                          const std::vector<Vec>& features_q,
                                          const BinaryMat& consistent) {
  const int np = static_cast<int>(costs.cost.rows());
  const int nq = static_cast<int>(costs.cost.cols());
  if (consistent.rows() != np || consistent.cols() != nq)
    throw std::invalid_argument("build_training_set: shape mismatch");

  PairTrainingSet ts;
  ts.cam_p = costs.cam_p;
  ts.cam_q = costs.cam_q;
  ts.examples.reserve(static_cast<std::size_t>(np) * static_cast<std::size_t>(nq));
  double positive_sum = 0.0;
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < nq; ++j) {
      PairExample ex;
      ex.i = i;
      ex.j = j;
      ex.label = consistent(i, j) != 0 ? 1 : -1;
      ex.delta = features_p[static_cast<std::size_t>(costs.arg_p(i, j))] -
                 features_q[static_cast<std::size_t>(costs.arg_q(i, j))];
      if (ex.label > 0) {
        ++ts.n_pos;
        positive_sum += costs.cost(i, j);
      } else {
        ++ts.n_neg;
      }
      ts.examples.push_back(std::move(ex));
    }
  }
  if (ts.n_pos == 0)
    throw std::runtime_error("no consistent matches for pair (" +
                             std::to_string(ts.cam_p) + "," +
                             std::to_string(ts.cam_q) + ")");
  ts.margin = positive_sum / static_cast<double>(ts.n_pos);
  return ts;
}

namespace detail {

inline double signed_factor(int label, LossLabelMode mode) {
  if (mode == LossLabelMode::kSigned) return static_cast<double>(label);
  return label > 0 ? 1.0 : 0.0;
}

}  // namespace detail

// Weighted sum of pair losses; matches weigh 1/n_pos, non-matches 1/n_neg.
inline double objective(const Mat& metric, const PairTrainingSet& ts,
                        LossLabelMode mode = LossLabelMode::kSigned) {
  if (ts.n_pos == 0)
    throw std::runtime_error("no consistent matches for pair (" +
                             std::to_string(ts.cam_p) + "," +
                             std::to_string(ts.cam_q) + ")");
  const double w_pos = 1.0 / static_cast<double>(ts.n_pos);
  const double w_neg = ts.n_neg > 0 ? 1.0 / static_cast<double>(ts.n_neg) : 0.0;
  double total = 0.0;
  for (const PairExample& ex : ts.examples) {
    const double e = ex.delta.dot(metric * ex.delta);
    const double s = detail::signed_factor(ex.label, mode);
    const double w = ex.label > 0 ? w_pos : w_neg;
    total += w * softplus(s * (e - ts.margin));
  }
  return total;
}

// Gradient of `objective` with respect to the metric:
// sum of w * s * sigmoid(s * (e - margin)) * delta delta^T.
inline Mat objective_gradient(const Mat& metric, const PairTrainingSet& ts,
                              LossLabelMode mode = LossLabelMode::kSigned) {
  if (ts.examples.empty())
    throw std::invalid_argument("objective_gradient: empty training set");
  const int d = static_cast<int>(ts.examples.front().delta.size());
  const double w_pos = 1.0 / static_cast<double>(ts.n_pos);
  const double w_neg = ts.n_neg > 0 ? 1.0 / static_cast<double>(ts.n_neg) : 0.0;
  Mat grad = Mat::Zero(d, d);
  for (const PairExample& ex : ts.examples) {
    const double e = ex.delta.dot(metric * ex.delta);
    const double s = detail::signed_factor(ex.label, mode);
    if (s == 0.0) continue;  // binary-mode non-matches are constant
    const double w = ex.label > 0 ? w_pos : w_neg;
    const double coef = w * s * sigmoid(s * (e - ts.margin));
    grad.noalias() += coef * (ex.delta * ex.delta.transpose());
  }
  return grad;
}

// Nearest positive semidefinite matrix: symmetrize, eigendecompose, clamp
// negative eigenvalues to zero.
inline Mat psd_project(const Mat& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("psd_project: matrix must be square");
  const Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("psd_project: eigendecomposition failed");
  const Vec clamped = es.eigenvalues().cwiseMax(0.0);
  Mat out = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

inline double min_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()),
                                        Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("min_eigenvalue: eigendecomposition failed");
  return es.eigenvalues().minCoeff();
}

struct OptimizerConfig {
  double initial_step = 1.0;
  int max_iterations = 200;
  double objective_tolerance = 1e-6;  // relative objective change
  LossLabelMode label_mode = LossLabelMode::kSigned;
};

struct TrainRecord {
  int iter = 0;
  double objective = 0.0;
  double step = 0.0;
  double min_eig = 0.0;
};

struct MetricModel {
  int cam_p = -1, cam_q = -1;
  Mat m;
};

struct LearnResult {
  MetricModel metric;
  std::vector<TrainRecord> trace;  // entry 0 is the initial objective
};

// Accelerated projected gradient with backtracking. Momentum steps that fail
// to descend trigger a restart with a plain projected gradient step, so the
// recorded objective never increases. Stops when the relative objective
// change drops below the tolerance or no descent step of size >= 1e-14
// exists.
inline LearnResult learn_metric(const PairTrainingSet& ts,
                                const OptimizerConfig& cfg, const Mat& m_init) {
  if (ts.n_pos == 0)
    throw std::runtime_error("no consistent matches for pair (" +
                             std::to_string(ts.cam_p) + "," +
                             std::to_string(ts.cam_q) + ")");
  if (ts.examples.empty())
    throw std::invalid_argument("learn_metric: empty training set");
  const int d = static_cast<int>(ts.examples.front().delta.size());
  if (m_init.rows() != d || m_init.cols() != d)
    throw std::invalid_argument("learn_metric: metric dimension mismatch");
  if (cfg.initial_step <= 0.0 || cfg.max_iterations < 1)
    throw std::invalid_argument("learn_metric: bad optimizer configuration");

  constexpr double kStepFloor = 1e-14;
  constexpr double kDescentSlack = 1e-12;

  LearnResult out;
  Mat m = psd_project(m_init);
  Mat m_prev = m;
  double f = objective(m, ts, cfg.label_mode);
  if (!std::isfinite(f))
    throw std::runtime_error("learn_metric: non-finite objective");
  double momentum = 1.0;
  double eta = cfg.initial_step;
  out.trace.push_back({0, f, eta, min_eigenvalue(m)});

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const Mat y = m + ((momentum - 1.0) / momentum_next) * (m - m_prev);
    const double fy = objective(y, ts, cfg.label_mode);
    const Mat gy = objective_gradient(y, ts, cfg.label_mode);

    // Backtrack until the quadratic majorization at y holds.
    Mat z;
    double fz = 0.0;
    while (true) {
      z = psd_project(y - eta * gy);
      fz = objective(z, ts, cfg.label_mode);
      const Mat dz = z - y;
      const double bound =
          fy + gy.cwiseProduct(dz).sum() + dz.squaredNorm() / (2.0 * eta);
      if (fz <= bound + kDescentSlack || eta * 0.5 < kStepFloor) break;
      eta *= 0.5;
    }

    bool stepped = false;
    if (fz <= f + kDescentSlack) {
      m_prev = m;
      m = z;
      momentum = momentum_next;
      stepped = true;
    } else {
      // Momentum overshot: restart from the current iterate.
      momentum = 1.0;
      const Mat gm = objective_gradient(m, ts, cfg.label_mode);
      double eta2 = eta;
      while (eta2 >= kStepFloor) {
        z = psd_project(m - eta2 * gm);
        fz = objective(z, ts, cfg.label_mode);
        if (fz <= f + kDescentSlack) break;
        eta2 *= 0.5;
      }
      if (fz <= f + kDescentSlack && eta2 >= kStepFloor) {
        m_prev = m;
        m = z;
        eta = eta2;
        stepped = true;
      }
    }

    if (!stepped) break;  // no descent direction left
    if (!std::isfinite(fz))
      throw std::runtime_error("learn_metric: non-finite objective");
    const double rel = std::abs(f - fz) / std::max(1.0, std::abs(f));
    f = fz;
    out.trace.push_back({iter, f, eta, min_eigenvalue(m)});
    if (rel < cfg.objective_tolerance) break;
  }

  out.metric.cam_p = ts.cam_p;
  out.metric.cam_q = ts.cam_q;
  out.metric.m = m;
  return out;
}

}  // namespace ccm
