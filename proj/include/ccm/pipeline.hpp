#pragma once

// The alternating pipeline: cluster each camera once, then repeat
//   learn pairwise metrics from consistency-filtered matches,
//   re-solve the pairwise assignments under the new metrics,
//   re-score reliability across the whole network,
// until no pair's assignment objective improves or max_iter is reached.
//
// Per camera pair, iteration t learns M^t from the filtered matches of
// iteration t-1, then accepts the re-solved assignment X^t only when
// G(X^t; M^t) improves on G(X^{t-1}; M^t) by more than the tolerance;
// otherwise the pair keeps its assignment and is frozen. The consistency
// rescoring is a barrier: it sees every pair's current assignment.

#include <cmath>
#include <cstdint>
#include <utility>
#include <iostream>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "ccm/consistency.hpp"
#include "ccm/core.hpp"
#include "ccm/crossview_match.hpp"
#include "ccm/dataset.hpp"
#include "ccm/eval.hpp"
#include "ccm/intra_cluster.hpp"
#include "ccm/metric_learn.hpp"

namespace ccm {

struct PipelineConfig {
  int max_iter = 10;
  int theta = 1;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;  // recorded in reports; the pipeline is deterministic
  int jobs = 1;
  double convergence_tol = 1e-9;
};

enum class Convergence { kContinue, kStop };

// A pair keeps iterating only while the re-solved assignment strictly
// improves the objective of the previous assignment under the new metric.
inline Convergence convergence_check(double g_prev, double g_curr,
                                     double tol = 1e-9) {
  return g_curr < g_prev - tol ? Convergence::kContinue : Convergence::kStop;
}

// Snapshot of one camera pair at the end of an iteration.
struct PairIteration {
  MetricModel metric;            // M^t
  CostMatrix costs;              // cluster costs under M^t
  AssignmentMatrix assignment;   // X^t
  BinaryMat reliability;         // network reliability of X^t
  BinaryMat consistent;          // filtered matches (reliability > theta)
  double g_curr = 0.0;           // G(X^t; M^t)
  double g_prev_metric =         // G(X^{t-1}; M^t); NaN when no step was taken
      std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  bool no_consistent = false;  // skipped learning: no positive matches
  std::vector<TrainRecord> train_trace;
};

struct IterationState {
  int t = 0;
  std::map<CameraPair, PairIteration> pairs;
};

struct PipelineState {
  std::vector<int> camera_ids;
  std::map<int, std::vector<Vec>> features;  // per camera, dataset order
  std::map<int, ClusterSet> clusters;
  std::vector<IterationState> history;  // history[t] is iteration t

  const IterationState& final_state() const {
    if (history.empty()) throw std::runtime_error("pipeline has no iterations");
    return history.back();
  }
};

namespace detail {

inline void rescore_consistency(IterationState& state, int theta) {
  NetworkAssignments net;
  for (const auto& [key, pair] : state.pairs) net.insert(pair.assignment);
  const ReliabilityTable rlt = reliability_table(net);
  const ConsistentAssignments kept = threshold_matches(rlt, theta);
  for (auto& [key, pair] : state.pairs) {
    pair.reliability = rlt.tables.at(key);
    pair.consistent = kept.kept.at(key);
  }
}

}  // namespace detail

// Clusters every camera and computes iteration 0: identity metrics, first
// assignments, first consistency pass.
inline PipelineState initialize_pipeline(const CameraDataset& ds,
                                         const PipelineConfig& cfg) {
  if (cfg.max_iter < 1)
    throw std::invalid_argument("run_pipeline: max_iter must be >= 1");
  if (cfg.theta < 0)
    throw std::invalid_argument("run_pipeline: theta must be >= 0");
  if (cfg.jobs < 1)
    throw std::invalid_argument("run_pipeline: jobs must be >= 1");

  PipelineState st;
  for (const auto& [cam, list] : ds.cameras) {
    if (list.empty()) {
      std::cerr << "warning: camera " << cam << " has no tracklets, dropped\n";
      continue;
    }
    st.camera_ids.push_back(cam);
    auto& f = st.features[cam];
    f.reserve(list.size());
    for (const auto& t : list) {
      if (t.feature.size() != ds.dimension)
        throw std::invalid_argument("run_pipeline: tracklet '" + t.tracklet_id +
                                    "' has wrong dimension");
      f.push_back(t.feature);
    }
  }
  if (st.camera_ids.size() < 3)
    throw std::invalid_argument("run_pipeline: pipeline requires >=3 cameras");

  // Clusters are computed once; later iterations only re-match them.
  // Keys are created up front so the parallel loop only writes to existing
  // slots.
  const int ncams = static_cast<int>(st.camera_ids.size());
  for (int cam : st.camera_ids) st.clusters[cam] = ClusterSet{};
  parallel_for(ncams, cfg.jobs, [&](int idx) {
    const int cam = st.camera_ids[static_cast<std::size_t>(idx)];
    st.clusters.at(cam) = cluster_camera(std::as_const(st.features).at(cam), cam);
  });

  std::vector<CameraPair> pair_keys;
  for (int a = 0; a < ncams; ++a)
    for (int b = a + 1; b < ncams; ++b)
      pair_keys.emplace_back(st.camera_ids[static_cast<std::size_t>(a)],
                             st.camera_ids[static_cast<std::size_t>(b)]);
  const int npairs = static_cast<int>(pair_keys.size());

  // Iteration 0: identity metric, first assignments, first reliability pass.
  IterationState init;
  init.t = 0;
  for (const CameraPair& key : pair_keys) init.pairs[key] = PairIteration{};
  const auto& clusters = std::as_const(st.clusters);
  const auto& features = std::as_const(st.features);
  parallel_for(npairs, cfg.jobs, [&](int idx) {
    const CameraPair key = pair_keys[static_cast<std::size_t>(idx)];
    PairIteration& pair = init.pairs.at(key);
    pair.metric.cam_p = key.first;
    pair.metric.cam_q = key.second;
    pair.metric.m = Mat::Identity(ds.dimension, ds.dimension);
    pair.costs = cluster_cost_matrix(clusters.at(key.first), clusters.at(key.second),
                                     features.at(key.first), features.at(key.second),
                                     pair.metric.m);
    pair.assignment = solve_assignment(pair.costs);
    pair.g_curr = assignment_objective(pair.costs.cost, pair.assignment.x);
  });
  detail::rescore_consistency(init, cfg.theta);
  st.history.push_back(std::move(init));
  return st;
}

// Runs iterations 1..max_iter on an initialized state, stopping early once
// every pair has converged.
inline void continue_pipeline(PipelineState& st, const PipelineConfig& cfg) {
  if (st.history.empty())
    throw std::invalid_argument("continue_pipeline: state is not initialized");
  std::vector<CameraPair> pair_keys;
  for (const auto& [key, pair] : st.history.back().pairs) pair_keys.push_back(key);
  const int npairs = static_cast<int>(pair_keys.size());

  for (int t = static_cast<int>(st.history.size()); t <= cfg.max_iter; ++t) {
    const IterationState& prev = st.history.back();
    bool all_converged = true;
    for (const auto& [key, pair] : prev.pairs)
      if (!pair.converged) all_converged = false;
    if (all_converged) break;

    IterationState next;
    next.t = t;
    for (const CameraPair& key : pair_keys) next.pairs[key] = PairIteration{};
    const auto& clusters = std::as_const(st.clusters);
    const auto& features = std::as_const(st.features);
    parallel_for(npairs, cfg.jobs, [&](int idx) {
      const CameraPair key = pair_keys[static_cast<std::size_t>(idx)];
      const PairIteration& before = prev.pairs.at(key);
      PairIteration& pair = next.pairs.at(key);

      if (before.converged) {  // frozen: carry the state forward
        pair = before;
        pair.train_trace.clear();
        pair.g_prev_metric = std::numeric_limits<double>::quiet_NaN();
        return;
      }
      if (before.consistent.sum() == 0) {
        // Nothing to learn from; the pair keeps its metric and freezes.
        pair = before;
        pair.train_trace.clear();
        pair.g_prev_metric = std::numeric_limits<double>::quiet_NaN();
        pair.no_consistent = true;
        pair.converged = true;
        return;
      }

      const PairTrainingSet ts = build_training_set(
          before.costs, features.at(key.first), features.at(key.second),
          before.consistent);
      LearnResult learned = learn_metric(ts, cfg.optimizer, before.metric.m);
      pair.metric = learned.metric;
      pair.train_trace = std::move(learned.trace);
      pair.costs = cluster_cost_matrix(clusters.at(key.first), clusters.at(key.second),
                                       features.at(key.first), features.at(key.second),
                                       pair.metric.m);
      const AssignmentMatrix candidate = solve_assignment(pair.costs);
      const double g_prev = assignment_objective(pair.costs.cost, before.assignment.x);
      const double g_cand = assignment_objective(pair.costs.cost, candidate.x);
      pair.g_prev_metric = g_prev;
      pair.no_consistent = false;
      if (convergence_check(g_prev, g_cand, cfg.convergence_tol) ==
          Convergence::kStop) {
        pair.assignment = before.assignment;
        pair.g_curr = g_prev;
        pair.converged = true;
      } else {
        pair.assignment = candidate;
        pair.g_curr = g_cand;
        pair.converged = false;
      }
    });
    detail::rescore_consistency(next, cfg.theta);
    st.history.push_back(std::move(next));
  }
}

inline PipelineState run_pipeline(const CameraDataset& ds,
                                  const PipelineConfig& cfg) {
  PipelineState st = initialize_pipeline(ds, cfg);
  continue_pipeline(st, cfg);
  return st;
}

}  // namespace ccm
