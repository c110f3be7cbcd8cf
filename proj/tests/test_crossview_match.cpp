#include "ccm/crossview_match.hpp"

#include <gtest/gtest.h>

#include <vector>

#include "oracles.hpp"

namespace {

using namespace ccm;

Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

std::vector<std::pair<int, int>> selected_pairs(const BinaryMat& x) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j)
      if (x(i, j) != 0) out.push_back({i, j});
  return out;
}

TEST(Mahalanobis, IdentityMetricIsSquaredEuclidean) {
  const Vec a = make_vec({1, 2, 3});
  const Vec b = make_vec({0, 0, 1});
  const Mat m = Mat::Identity(3, 3);
  EXPECT_DOUBLE_EQ(mahalanobis_distance(a, b, m), 1 + 4 + 4);
}

TEST(Mahalanobis, MatchesExplicitDoubleLoop) {
  oracle::Rand rand(41);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = rand.uniform_int(1, 8);
    const Vec a = rand.vector(d);
    const Vec b = rand.vector(d);
    const Mat m = rand.psd_matrix(d);
    double expected = 0.0;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c)
        expected += (a[r] - b[r]) * m(r, c) * (a[c] - b[c]);
    EXPECT_NEAR(mahalanobis_distance(a, b, m), std::max(expected, 0.0), 1e-10);
  }
}

TEST(Mahalanobis, ClampsTinyNegativeToZero) {
  // A metric that is numerically PSD but can produce -0-ish round-off.
  const Vec a = make_vec({1e-8, 0});
  const Vec b = make_vec({0, 1e-8});
  Mat m(2, 2);
  m << 1, 1, 1, 1;  // rank-1 PSD; (a-b) nearly in the null space
  EXPECT_GE(mahalanobis_distance(a, b, m), 0.0);
}

TEST(Mahalanobis, RejectsShapeMismatch) {
  EXPECT_THROW(mahalanobis_distance(make_vec({1}), make_vec({1, 2}), Mat::Identity(1, 1)),
               std::invalid_argument);
  EXPECT_THROW(mahalanobis_distance(make_vec({1, 2}), make_vec({1, 2}), Mat::Identity(3, 3)),
               std::invalid_argument);
}

ClusterSet clusters_of(int camera, std::vector<std::vector<int>> groups) {
  ClusterSet cs;
  cs.camera_id = camera;
  cs.clusters = std::move(groups);
  return cs;
}

TEST(ClusterCost, MinOverMemberPairsWithWitness) {
  // Camera p: cluster {0, 1} with 1-d points 0 and 1; camera q: cluster {0}
  // at 3. Cost = min((0-3)^2, (1-3)^2) = 4, witnessed by p-sample 1.
  const std::vector<Vec> fp{make_vec({0}), make_vec({1})};
  const std::vector<Vec> fq{make_vec({3})};
  const CostMatrix cm = cluster_cost_matrix(clusters_of(0, {{0, 1}}),
                                            clusters_of(1, {{0}}), fp, fq,
                                            Mat::Identity(1, 1));
  ASSERT_EQ(cm.cost.rows(), 1);
  ASSERT_EQ(cm.cost.cols(), 1);
  EXPECT_DOUBLE_EQ(cm.cost(0, 0), 4.0);
  EXPECT_EQ(cm.arg_p(0, 0), 1);
  EXPECT_EQ(cm.arg_q(0, 0), 0);
  EXPECT_EQ(cm.cam_p, 0);
  EXPECT_EQ(cm.cam_q, 1);
}

TEST(ClusterCost, FirstMinimalWitnessWins) {
  // Two member pairs tie at distance 0; the first in member-major order wins.
  const std::vector<Vec> fp{make_vec({5}), make_vec({5})};
  const std::vector<Vec> fq{make_vec({5}), make_vec({5})};
  const CostMatrix cm = cluster_cost_matrix(clusters_of(0, {{0, 1}}),
                                            clusters_of(1, {{0, 1}}), fp, fq,
                                            Mat::Identity(1, 1));
  EXPECT_DOUBLE_EQ(cm.cost(0, 0), 0.0);
  EXPECT_EQ(cm.arg_p(0, 0), 0);
  EXPECT_EQ(cm.arg_q(0, 0), 0);
}

TEST(ClusterCost, BruteForceAgreementOnRandomInputs) {
  oracle::Rand rand(43);
  for (int rep = 0; rep < 10; ++rep) {
    const int d = rand.uniform_int(1, 4);
    const int n_p = rand.uniform_int(2, 8);
    const int n_q = rand.uniform_int(2, 8);
    std::vector<Vec> fp, fq;
    for (int i = 0; i < n_p; ++i) fp.push_back(rand.vector(d));
    for (int i = 0; i < n_q; ++i) fq.push_back(rand.vector(d));
    const Mat m = rand.psd_matrix(d);
    const ClusterSet cp = cluster_camera(fp, 0);
    const ClusterSet cq = cluster_camera(fq, 1);
    const CostMatrix cm = cluster_cost_matrix(cp, cq, fp, fq, m);
    for (int i = 0; i < cp.num_clusters(); ++i) {
      for (int j = 0; j < cq.num_clusters(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (int a : cp.clusters[static_cast<std::size_t>(i)])
          for (int b : cq.clusters[static_cast<std::size_t>(j)])
            best = std::min(best,
                            mahalanobis_distance(fp[static_cast<std::size_t>(a)],
                                                 fq[static_cast<std::size_t>(b)], m));
        EXPECT_DOUBLE_EQ(cm.cost(i, j), best);
        // The recorded witness attains the minimum.
        EXPECT_DOUBLE_EQ(
            mahalanobis_distance(fp[static_cast<std::size_t>(cm.arg_p(i, j))],
                                 fq[static_cast<std::size_t>(cm.arg_q(i, j))], m),
            best);
      }
    }
  }
}

CostMatrix as_costs(const Mat& c) {
  CostMatrix cm;
  cm.cam_p = 0;
  cm.cam_q = 1;
  cm.cost = c;
  cm.arg_p = Eigen::MatrixXi::Zero(c.rows(), c.cols());
  cm.arg_q = Eigen::MatrixXi::Zero(c.rows(), c.cols());
  return cm;
}

TEST(Assignment, TwoByTwoKnownOptimum) {
  Mat c(2, 2);
  c << 1, 2, 2, 1;
  const AssignmentMatrix am = solve_assignment(as_costs(c));
  EXPECT_EQ(am.x(0, 0), 1);
  EXPECT_EQ(am.x(1, 1), 1);
  EXPECT_EQ(am.x(0, 1), 0);
  EXPECT_EQ(am.x(1, 0), 0);
  EXPECT_DOUBLE_EQ(assignment_objective(c, am.x), 2.0);
}

TEST(Assignment, TieBrokenLexicographically) {
  // All entries equal: any perfect matching is optimal; the diagonal is the
  // lexicographically smallest pair list.
  Mat c = Mat::Ones(3, 3);
  const AssignmentMatrix am = solve_assignment(as_costs(c));
  const std::vector<std::pair<int, int>> expected{{0, 0}, {1, 1}, {2, 2}};
  EXPECT_EQ(selected_pairs(am.x), expected);
}

TEST(Assignment, AntiDiagonalTie) {
  // Two optima: (0,0),(1,1) and (0,1),(1,0), both cost 2. Lexicographic
  // order prefers (0,0).
  Mat c(2, 2);
  c << 1, 1, 1, 1;
  const AssignmentMatrix am = solve_assignment(as_costs(c));
  const std::vector<std::pair<int, int>> expected{{0, 0}, {1, 1}};
  EXPECT_EQ(selected_pairs(am.x), expected);
}

TEST(Assignment, RectangularLeavesExtraRowsUnmatched) {
  Mat c(3, 2);
  c << 5, 9,
       1, 2,
       9, 1;
  // min(3, 2) = 2 matches. Optimal: row1->col0 (1) + row2->col1 (1) = 2.
  const AssignmentMatrix am = solve_assignment(as_costs(c));
  const std::vector<std::pair<int, int>> expected{{1, 0}, {2, 1}};
  EXPECT_EQ(selected_pairs(am.x), expected);
}

TEST(Assignment, MatchesBruteForceOnRandomIntegerCosts) {
  oracle::Rand rand(47);
  for (int rep = 0; rep < 200; ++rep) {
    const int np = rand.uniform_int(1, 6);
    const int nq = rand.uniform_int(1, 6);
    const Mat c = rand.integer_matrix(np, nq, 0, 9);
    const AssignmentMatrix am = solve_assignment(as_costs(c));
    const auto pairs = selected_pairs(am.x);
    const oracle::AssignmentResult bf = oracle::brute_force_assignment(c);
    // Exact equality: integer costs make both objective and tie-break exact.
    EXPECT_EQ(pairs, bf.pairs) << "rep " << rep << "\n" << c;
    EXPECT_DOUBLE_EQ(assignment_objective(c, am.x), bf.cost);
  }
}

TEST(Assignment, RowAndColumnSumsAtMostOneExactlyMinMatches) {
  oracle::Rand rand(53);
  for (int rep = 0; rep < 50; ++rep) {
    const int np = rand.uniform_int(1, 10);
    const int nq = rand.uniform_int(1, 10);
    Mat c(np, nq);
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < nq; ++j) c(i, j) = rand.uniform(-3, 3);
    const AssignmentMatrix am = solve_assignment(as_costs(c));
    int total = 0;
    for (int i = 0; i < np; ++i) {
      int row = 0;
      for (int j = 0; j < nq; ++j) row += am.x(i, j);
      EXPECT_LE(row, 1);
      total += row;
    }
    for (int j = 0; j < nq; ++j) {
      int col = 0;
      for (int i = 0; i < np; ++i) col += am.x(i, j);
      EXPECT_LE(col, 1);
    }
    EXPECT_EQ(total, std::min(np, nq));
  }
}

TEST(Assignment, ObjectiveInvariantToConstantShift) {
  oracle::Rand rand(59);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = rand.uniform_int(2, 6);
    const Mat c = rand.integer_matrix(n, n, 0, 9);
    const AssignmentMatrix a1 = solve_assignment(as_costs(c));
    const AssignmentMatrix a2 = solve_assignment(as_costs(c.array() + 7.0));
    EXPECT_EQ(selected_pairs(a1.x), selected_pairs(a2.x));
  }
}

TEST(Assignment, RejectsBadInputs) {
  Mat c(1, 1);
  c(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(solve_assignment(as_costs(c)), std::invalid_argument);
  EXPECT_THROW(assignment_objective(Mat::Zero(2, 2), BinaryMat::Zero(2, 3)),
               std::invalid_argument);
}

TEST(Assignment, LargeRandomMatchesObjectiveLowerBound) {
  // On a larger instance, compare the solver's objective to the dual bound
  // computed by an independent greedy row/column reduction (a valid lower
  // bound for any assignment).
  oracle::Rand rand(61);
  const int n = 40;
  Mat c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = rand.uniform(0, 100);
  Mat r = c;
  double bound = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = r.row(i).minCoeff();
    bound += m;
    r.row(i).array() -= m;
  }
  for (int j = 0; j < n; ++j) {
    const double m = r.col(j).minCoeff();
    bound += m;
    r.col(j).array() -= m;
  }
  const AssignmentMatrix am = solve_assignment(as_costs(c));
  EXPECT_GE(assignment_objective(c, am.x) + 1e-9, bound);
}

}  // namespace
