#pragma once

// Global network consistency: a direct match between two cameras is scored
// by how many other cameras confirm it through a two-hop path. The
// reliability of (i, j) across pair (p, q) is the direct bit plus the number
// of intermediate cameras r with matches i->k (p,r) and k->j (r,q). Matches
// at or below the reliability threshold are discarded.

#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "ccm/core.hpp"
#include "ccm/crossview_match.hpp"

namespace ccm {

// All pairwise assignments of a camera network, keyed by (p, q) with p < q.
// Lookups in (q, p) orientation transparently transpose.
struct NetworkAssignments {
  std::map<CameraPair, AssignmentMatrix> pairs;

  void insert(const AssignmentMatrix& a) {
    if (a.cam_p == a.cam_q)
      throw std::invalid_argument("NetworkAssignments: camera matched to itself");
    if (a.cam_p < a.cam_q) {
      pairs[{a.cam_p, a.cam_q}] = a;
    } else {
      AssignmentMatrix t;
      t.cam_p = a.cam_q;
      t.cam_q = a.cam_p;
      t.x = a.x.transpose();
      pairs[{t.cam_p, t.cam_q}] = t;
    }
  }

  std::vector<int> cameras() const {
    std::set<int> ids;
    for (const auto& [key, a] : pairs) {
      ids.insert(key.first);
      ids.insert(key.second);
    }
    return {ids.begin(), ids.end()};
  }

  bool has(int a, int b) const { return pairs.count(pair_key(a, b)) > 0; }

  // x_{a,b}^{i,j} for any orientation of (a, b).
  int get(int a, int b, int i, int j) const {
    const auto it = pairs.find(pair_key(a, b));
    if (it == pairs.end())
      throw std::invalid_argument("NetworkAssignments: unknown camera pair");
    return a <= b ? it->second.x(i, j) : it->second.x(j, i);
  }

  // Number of clusters camera `cam` exposes toward camera `other`.
  int clusters_of(int cam, int other) const {
    const auto it = pairs.find(pair_key(cam, other));
    if (it == pairs.end())
      throw std::invalid_argument("NetworkAssignments: unknown camera pair");
    return cam <= other ? static_cast<int>(it->second.x.rows())
                        : static_cast<int>(it->second.x.cols());
  }
};

namespace detail {

inline void require_network(const NetworkAssignments& net) {
  if (net.cameras().size() < 3)
    throw std::runtime_error("consistency requires >=3 cameras");
}

// row_match[i] = cluster of camera b matched to cluster i of camera a, or -1.
inline std::vector<int> row_matches(const NetworkAssignments& net, int a, int b) {
  const int na = net.clusters_of(a, b);
  const int nb = net.clusters_of(b, a);
  std::vector<int> match(static_cast<std::size_t>(na), -1);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j)
      if (net.get(a, b, i, j) != 0) {
        match[static_cast<std::size_t>(i)] = j;
        break;  // row sums are at most one
      }
  return match;
}

}  // namespace detail

// Count of two-hop confirmations of match (i, j) across pair (p, q):
// intermediate cameras r where i matches some k in (p, r) and that k matches
// j in (r, q). The direct bit is not included.
inline int transitive_reliability(const NetworkAssignments& net, int p, int q,
                                  int i, int j) {
  detail::require_network(net);
  if (p == q) throw std::invalid_argument("transitive_reliability: p == q");
  int count = 0;
  for (int r : net.cameras()) {
    if (r == p || r == q) continue;
    if (!net.has(p, r) || !net.has(r, q)) continue;
    const int nr = net.clusters_of(r, p);
    for (int k = 0; k < nr; ++k)
      if (net.get(p, r, i, k) != 0 && net.get(r, q, k, j) != 0) ++count;
  }
  return count;
}

// Reliability of every candidate match: direct bit plus two-hop count.
struct ReliabilityTable {
  std::map<CameraPair, BinaryMat> tables;  // same shapes as the assignments
};

inline ReliabilityTable reliability_table(const NetworkAssignments& net) {
  detail::require_network(net);
  const std::vector<int> cams = net.cameras();

  // Precompute row matches for every ordered camera pair present.
  std::map<CameraPair, std::vector<int>> forward;   // (a,b) with a<b: a->b
  std::map<CameraPair, std::vector<int>> backward;  // (a,b) with a<b: b->a
  for (const auto& [key, a] : net.pairs) {
    forward[key] = detail::row_matches(net, key.first, key.second);
    backward[key] = detail::row_matches(net, key.second, key.first);
  }
  const auto match_of = [&](int a, int b, int i) -> int {
    const CameraPair key = pair_key(a, b);
    const auto& table = a <= b ? forward : backward;
    const auto it = table.find(key);
    if (it == table.end()) return -1;
    return it->second[static_cast<std::size_t>(i)];
  };

  ReliabilityTable out;
  for (const auto& [key, a] : net.pairs) {
    const int p = key.first, q = key.second;
    const int np = static_cast<int>(a.x.rows());
    const int nq = static_cast<int>(a.x.cols());
    BinaryMat table = BinaryMat::Zero(np, nq);
    for (int i = 0; i < np; ++i) {
      for (int j = 0; j < nq; ++j) {
        int score = a.x(i, j);
        for (int r : cams) {
          if (r == p || r == q) continue;
          if (!net.has(p, r) || !net.has(r, q)) continue;
          const int k = match_of(p, r, i);
          if (k >= 0 && match_of(r, q, k) == j) ++score;
        }
        table(i, j) = score;
      }
    }
    out.tables[key] = std::move(table);
  }
  return out;
}

// Keeps matches whose reliability strictly exceeds theta. The result may
// violate the one-to-one constraints; it is a candidate set, not an
// assignment.
struct ConsistentAssignments {
  std::map<CameraPair, BinaryMat> kept;
  int theta = 1;
};

inline ConsistentAssignments threshold_matches(const ReliabilityTable& rlt,
                                               int theta) {
  if (theta < 0)
    throw std::invalid_argument("threshold_matches: theta must be >= 0");
  ConsistentAssignments out;
  out.theta = theta;
  for (const auto& [key, table] : rlt.tables) {
    BinaryMat kept = BinaryMat::Zero(table.rows(), table.cols());
    for (int i = 0; i < table.rows(); ++i)
      for (int j = 0; j < table.cols(); ++j)
        kept(i, j) = table(i, j) > theta ? 1 : 0;
    out.kept[key] = std::move(kept);
  }
  return out;
}

}  // namespace ccm
