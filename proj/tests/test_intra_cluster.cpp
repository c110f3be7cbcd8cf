#include "ccm/intra_cluster.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "oracles.hpp"

namespace {

using namespace ccm;

std::vector<Vec> points1d(std::initializer_list<double> xs) {
  std::vector<Vec> out;
  for (double x : xs) {
    Vec v(1);
    v[0] = x;
    out.push_back(v);
  }
  return out;
}

TEST(FirstNeighbors, KnownLine) {
  // 0 and 1 are mutual nearest; 10's nearest is 1.
  const FirstNeighborIndex idx = first_neighbors(points1d({0, 1, 10}));
  ASSERT_EQ(idx.first.size(), 3u);
  EXPECT_EQ(idx.first[0], 1);
  EXPECT_EQ(idx.first[1], 0);
  EXPECT_EQ(idx.first[2], 1);
}

TEST(FirstNeighbors, TieKeepsSmallestIndex) {
  // 1 is equidistant from 0 and 2.
  const FirstNeighborIndex idx = first_neighbors(points1d({0, 1, 2}));
  EXPECT_EQ(idx.first[1], 0);
}

TEST(FirstNeighbors, RejectsTooFewAndMismatched) {
  EXPECT_THROW(first_neighbors(points1d({0})), std::invalid_argument);
  std::vector<Vec> bad = points1d({0, 1});
  bad.push_back(Vec::Zero(2));
  EXPECT_THROW(first_neighbors(bad), std::invalid_argument);
}

TEST(Adjacency, LinkRulesOnKnownLine) {
  // first = [1, 0, 1]: 0-1 mutual, 2-1 (1 is 2's neighbor), 0-2 share 1? No:
  // k_0 = 1, k_2 = 1, so 0 and 2 also share the same first neighbor.
  const AdjacencyMatrix adj = build_adjacency(FirstNeighborIndex{{1, 0, 1}});
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i < adj.n; ++i)
    for (int j : adj.neighbors[static_cast<std::size_t>(i)])
      if (i < j) edges.insert({i, j});
  const std::set<std::pair<int, int>> expected{{0, 1}, {0, 2}, {1, 2}};
  EXPECT_EQ(edges, expected);
}

TEST(Adjacency, NoSharedNeighborNoEdge) {
  // Two separated mutual pairs: 0-1 and 2-3 only.
  const AdjacencyMatrix adj = build_adjacency(FirstNeighborIndex{{1, 0, 3, 2}});
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i < adj.n; ++i)
    for (int j : adj.neighbors[static_cast<std::size_t>(i)])
      if (i < j) edges.insert({i, j});
  const std::set<std::pair<int, int>> expected{{0, 1}, {2, 3}};
  EXPECT_EQ(edges, expected);
}

TEST(Adjacency, RejectsInvalidIndex) {
  EXPECT_THROW(build_adjacency(FirstNeighborIndex{{1, 5}}), std::invalid_argument);
  EXPECT_THROW(build_adjacency(FirstNeighborIndex{{0, 0}}), std::invalid_argument);
}

TEST(ClusterCamera, SingletonInput) {
  const ClusterSet cs = cluster_camera(points1d({3.0}), 7);
  EXPECT_EQ(cs.camera_id, 7);
  ASSERT_EQ(cs.num_clusters(), 1);
  EXPECT_EQ(cs.clusters[0], std::vector<int>({0}));
}

TEST(ClusterCamera, TwoWellSeparatedGroups) {
  const ClusterSet cs = cluster_camera(points1d({0.0, 0.1, 0.2, 9.0, 9.1}));
  ASSERT_EQ(cs.num_clusters(), 2);
  EXPECT_EQ(cs.clusters[0], std::vector<int>({0, 1, 2}));
  EXPECT_EQ(cs.clusters[1], std::vector<int>({3, 4}));
}

TEST(ClusterCamera, ChainMergesIntoOneCluster) {
  // Equally spaced points: first = [1, 0, 1, 2] (ties keep the smaller
  // index), giving edges 0-1, 1-2, 2-3, 0-2 — a single component.
  const ClusterSet cs = cluster_camera(points1d({0, 1, 2, 3}));
  ASSERT_EQ(cs.num_clusters(), 1);
  EXPECT_EQ(cs.clusters[0], std::vector<int>({0, 1, 2, 3}));
  EXPECT_EQ(cs.clusters, oracle::component_clusters(points1d({0, 1, 2, 3})));
}

TEST(ClusterCamera, MatchesIndependentComponentOracle) {
  oracle::Rand rand(29);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = rand.uniform_int(2, 40);
    const int d = rand.uniform_int(1, 6);
    std::vector<Vec> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pts.push_back(rand.vector(d));
    const ClusterSet cs = cluster_camera(pts);
    EXPECT_EQ(cs.clusters, oracle::component_clusters(pts)) << "rep " << rep;
  }
}

TEST(ClusterCamera, PartitionProperties) {
  oracle::Rand rand(31);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = rand.uniform_int(2, 25);
    std::vector<Vec> pts;
    for (int i = 0; i < n; ++i) pts.push_back(rand.vector(3));
    const ClusterSet cs = cluster_camera(pts);
    std::vector<int> seen;
    int prev_min = -1;
    for (const auto& c : cs.clusters) {
      ASSERT_FALSE(c.empty());
      // Every cluster has at least 2 members: each sample links to its
      // first neighbor, so no vertex is isolated.
      EXPECT_GE(c.size(), 2u);
      EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
      EXPECT_GT(c.front(), prev_min);
      prev_min = c.front();
      for (int m : c) seen.push_back(m);
    }
    std::sort(seen.begin(), seen.end());
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    EXPECT_EQ(seen, all);
  }
}

TEST(ClusterCamera, IdenticalPointsCollapse) {
  const ClusterSet cs = cluster_camera(points1d({5, 5, 5, 5}));
  ASSERT_EQ(cs.num_clusters(), 1);
  EXPECT_EQ(cs.clusters[0], std::vector<int>({0, 1, 2, 3}));
}

TEST(ClusterCamera, RejectsEmptyCamera) {
  EXPECT_THROW(cluster_camera({}), std::invalid_argument);
}

}  // namespace
