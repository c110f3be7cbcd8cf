#pragma once

// Per-camera clustering: link every sample to its first (nearest) neighbor,
// then take connected components of the resulting symmetric graph. Two
// samples also join when they share the same first neighbor. One linking
// round only — no recursion on the resulting clusters.

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ccm/core.hpp"

namespace ccm {

struct FirstNeighborIndex {
  std::vector<int> first;  // first[i] = index of the nearest other sample
};

// Squared Euclidean nearest neighbor, excluding self. Ties keep the smallest
// index. Requires at least two samples.
inline FirstNeighborIndex first_neighbors(const std::vector<Vec>& features) {
  const int n = static_cast<int>(features.size());
  if (n < 2)
    throw std::invalid_argument("first_neighbors: need at least 2 samples");
  FirstNeighborIndex out;
  out.first.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (features[static_cast<std::size_t>(j)].size() !=
          features[static_cast<std::size_t>(i)].size())
        throw std::invalid_argument("first_neighbors: dimension mismatch");
      const double d = (features[static_cast<std::size_t>(i)] -
                        features[static_cast<std::size_t>(j)])
                           .squaredNorm();
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    out.first[static_cast<std::size_t>(i)] = arg;
  }
  return out;
}

// Sparse symmetric adjacency with no self loops; neighbor lists sorted.
struct AdjacencyMatrix {
  int n = 0;
  std::vector<std::vector<int>> neighbors;
};

// i and j are linked when one is the other's first neighbor or both share
// the same first neighbor.
inline AdjacencyMatrix build_adjacency(const FirstNeighborIndex& index) {
  const int n = static_cast<int>(index.first.size());
  AdjacencyMatrix adj;
  adj.n = n;
  adj.neighbors.assign(static_cast<std::size_t>(n), {});
  for (int i = 0; i < n; ++i) {
    const int ki = index.first[static_cast<std::size_t>(i)];
    if (ki < 0 || ki >= n || ki == i)
      throw std::invalid_argument("build_adjacency: invalid neighbor index");
    for (int j = i + 1; j < n; ++j) {
      const int kj = index.first[static_cast<std::size_t>(j)];
      if (i == kj || j == ki || ki == kj) {
        adj.neighbors[static_cast<std::size_t>(i)].push_back(j);
        adj.neighbors[static_cast<std::size_t>(j)].push_back(i);
      }
    }
  }
  return adj;
}

// Clusters of one camera: member indices sorted ascending; clusters ordered
// by smallest member.
struct ClusterSet {
  int camera_id = -1;
  std::vector<std::vector<int>> clusters;

  int num_clusters() const { return static_cast<int>(clusters.size()); }
};

inline ClusterSet cluster_camera(const std::vector<Vec>& features,
                                 int camera_id = -1) {
  const int n = static_cast<int>(features.size());
  if (n < 1)
    throw std::invalid_argument("cluster_camera: camera has no samples");
  ClusterSet out;
  out.camera_id = camera_id;
  if (n == 1) {
    out.clusters.push_back({0});
    return out;
  }
  const AdjacencyMatrix adj = build_adjacency(first_neighbors(features));
  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  for (int start = 0; start < n; ++start) {
    if (visited[static_cast<std::size_t>(start)]) continue;
    std::vector<int> members;
    std::vector<int> stack{start};
    visited[static_cast<std::size_t>(start)] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      members.push_back(u);
      for (int v : adj.neighbors[static_cast<std::size_t>(u)]) {
        if (!visited[static_cast<std::size_t>(v)]) {
          visited[static_cast<std::size_t>(v)] = 1;
          stack.push_back(v);
        }
      }
    }
    std::sort(members.begin(), members.end());
    out.clusters.push_back(std::move(members));
  }
  // Scanning start points in ascending order already yields clusters ordered
  // by their smallest member.
  return out;
}

}  // namespace ccm
