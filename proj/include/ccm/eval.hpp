#pragma once

// Ground-truth evaluation. Cluster-level match decisions are scored against
// majority-identity labels (precision / recall / F1, per camera pair and
// aggregated micro / macro). Retrieval is scored by ranking every labeled
// tracklet against all tracklets of other cameras under the minimum over the
// pairwise metrics (CMC and mean average precision).

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccm/core.hpp"
#include "ccm/dataset.hpp"
#include "ccm/intra_cluster.hpp"
#include "ccm/metric_learn.hpp"

namespace ccm {

// Majority identity of a cluster; ties pick the lexicographically smallest
// identity. Every member must be labeled.
inline std::string majority_identity(const std::vector<int>& members,
                                     const std::vector<TrackletFeature>& camera) {
  if (members.empty())
    throw std::invalid_argument("majority_identity: empty cluster");
  std::map<std::string, int> counts;
  for (int m : members) {
    if (m < 0 || m >= static_cast<int>(camera.size()))
      throw std::invalid_argument("majority_identity: member index out of range");
    const auto& t = camera[static_cast<std::size_t>(m)];
    if (!t.identity)
      throw std::runtime_error("majority_identity: tracklet '" + t.tracklet_id +
                               "' has no identity");
    ++counts[*t.identity];
  }
  int best = 0;
  std::string winner;
  for (const auto& [ident, n] : counts) {  // map order = lexicographic
    if (n > best) {
      best = n;
      winner = ident;
    }
  }
  return winner;
}

struct PairCounts {
  long long tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;

  void derive() {
    precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
};

struct MatchEvaluation {
  std::map<CameraPair, PairCounts> per_pair;
  PairCounts micro;  // counts summed over pairs, then derived
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
};

// Scores a set of binary cluster-match decisions (one matrix per camera
// pair) against majority-identity ground truth.
inline MatchEvaluation evaluate_matches(
    const std::map<CameraPair, BinaryMat>& predicted,
    const std::map<int, ClusterSet>& clusters, const CameraDataset& ds) {
  // Majority identities per camera, computed once.
  std::map<int, std::vector<std::string>> labels;
  for (const auto& [cam, cset] : clusters) {
    const auto it = ds.cameras.find(cam);
    if (it == ds.cameras.end())
      throw std::invalid_argument("evaluate_matches: camera " + std::to_string(cam) +
                                  " missing from dataset");
    auto& lab = labels[cam];
    lab.reserve(cset.clusters.size());
    for (const auto& members : cset.clusters)
      lab.push_back(majority_identity(members, it->second));
  }

  MatchEvaluation out;
  for (const auto& [key, x] : predicted) {
    const auto lp = labels.find(key.first);
    const auto lq = labels.find(key.second);
    if (lp == labels.end() || lq == labels.end())
      throw std::invalid_argument("evaluate_matches: cluster sets missing for pair " +
                                  pair_label(key));
    if (x.rows() != static_cast<int>(lp->second.size()) ||
        x.cols() != static_cast<int>(lq->second.size()))
      throw std::invalid_argument("evaluate_matches: shape mismatch for pair " +
                                  pair_label(key));
    PairCounts c;
    for (int i = 0; i < x.rows(); ++i) {
      for (int j = 0; j < x.cols(); ++j) {
        const bool same = lp->second[static_cast<std::size_t>(i)] ==
                          lq->second[static_cast<std::size_t>(j)];
        const bool pred = x(i, j) != 0;
        if (pred && same) ++c.tp;
        if (pred && !same) ++c.fp;
        if (!pred && same) ++c.fn;
      }
    }
    c.derive();
    out.micro.tp += c.tp;
    out.micro.fp += c.fp;
    out.micro.fn += c.fn;
    out.per_pair[key] = c;
  }
  out.micro.derive();
  if (!out.per_pair.empty()) {
    for (const auto& [key, c] : out.per_pair) {
      out.macro_precision += c.precision;
      out.macro_recall += c.recall;
      out.macro_f1 += c.f1;
    }
    const double n = static_cast<double>(out.per_pair.size());
    out.macro_precision /= n;
    out.macro_recall /= n;
    out.macro_f1 /= n;
  }
  return out;
}

// Test-time distance: minimum over all pairwise metric models.
inline double query_gallery_distance(const Vec& query, const Vec& gallery,
                                     const std::vector<MetricModel>& metrics) {
  if (metrics.empty())
    throw std::invalid_argument("query_gallery_distance: no metric models");
  double best = std::numeric_limits<double>::infinity();
  for (const MetricModel& m : metrics)
    best = std::min(best, mahalanobis_distance(query, gallery, m.m));
  return best;
}

struct RetrievalEvaluation {
  std::vector<double> cmc;  // cmc[k] = fraction of queries correct by rank k+1
  double mean_ap = 0.0;
  int num_queries = 0;       // queries actually ranked
  int excluded_queries = 0;  // no same-identity item in their gallery
};

// Every query is ranked against the gallery tracklets of *other* cameras.
// Ties are broken by gallery position. Queries whose cross-camera gallery
// lacks their identity are excluded and counted.
inline RetrievalEvaluation evaluate_retrieval(
    const std::vector<TrackletFeature>& queries,
    const std::vector<TrackletFeature>& gallery,
    const std::vector<MetricModel>& metrics) {
  if (metrics.empty())
    throw std::invalid_argument("evaluate_retrieval: no metric models");
  for (const auto& t : queries)
    if (!t.identity)
      throw std::runtime_error("evaluate_retrieval: query '" + t.tracklet_id +
                               "' has no identity");
  for (const auto& t : gallery)
    if (!t.identity)
      throw std::runtime_error("evaluate_retrieval: gallery item '" + t.tracklet_id +
                               "' has no identity");

  RetrievalEvaluation out;
  std::vector<int> first_ranks;  // 1-based rank of first correct item
  double ap_sum = 0.0;
  int max_gallery = 0;

  for (const auto& q : queries) {
    // Candidate list: other-camera gallery items, in gallery order.
    std::vector<int> cand;
    cand.reserve(gallery.size());
    bool any_correct = false;
    for (int g = 0; g < static_cast<int>(gallery.size()); ++g) {
      const auto& item = gallery[static_cast<std::size_t>(g)];
      if (item.camera_id == q.camera_id) continue;
      if (item.tracklet_id == q.tracklet_id) continue;
      cand.push_back(g);
      if (*item.identity == *q.identity) any_correct = true;
    }
    if (!any_correct) {
      ++out.excluded_queries;
      continue;
    }
    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(cand.size());
    for (int g : cand)
      ranked.emplace_back(
          query_gallery_distance(q.feature, gallery[static_cast<std::size_t>(g)].feature,
                                 metrics),
          g);
    std::sort(ranked.begin(), ranked.end());  // distance, then gallery index

    int first = -1;
    int hits = 0;
    double ap = 0.0;
    for (int r = 0; r < static_cast<int>(ranked.size()); ++r) {
      const auto& item = gallery[static_cast<std::size_t>(ranked[static_cast<std::size_t>(r)].second)];
      if (*item.identity == *q.identity) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(r + 1);
        if (first < 0) first = r + 1;
      }
    }
    ap /= static_cast<double>(hits);
    ap_sum += ap;
    first_ranks.push_back(first);
    max_gallery = std::max(max_gallery, static_cast<int>(ranked.size()));
    ++out.num_queries;
  }

  if (out.num_queries > 0) {
    out.mean_ap = ap_sum / static_cast<double>(out.num_queries);
    out.cmc.assign(static_cast<std::size_t>(max_gallery), 0.0);
    for (int r : first_ranks)
      if (r - 1 < max_gallery) out.cmc[static_cast<std::size_t>(r - 1)] += 1.0;
    double cum = 0.0;
    for (double& v : out.cmc) {
      cum += v;
      v = cum / static_cast<double>(out.num_queries);
    }
  }
  return out;
}

}  // namespace ccm
