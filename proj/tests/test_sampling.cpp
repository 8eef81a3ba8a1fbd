#include "rdc/kdtree.hpp"
#include "rdc/sampling.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numbers>
#include <random>
#include <set>

using namespace rdc;

namespace {

constexpr double kPi = std::numbers::pi;

Trajectory two_clusters(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 0.05);
  Trajectory t;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d base = i < 50 ? Eigen::Vector3d(0, 0, 0) : Eigen::Vector3d(10, 0, 0);
    t.emplace_back(Eigen::Quaterniond::Identity(), base + Eigen::Vector3d(g(rng), g(rng), g(rng)),
                   std::nullopt, i);
  }
  return t;
}

// Exhaustive 2-means over every assignment of a small instance.
double brute_force_two_means(const Matrix6Xd& x, std::vector<int>& best_assign) {
  const int n = static_cast<int>(x.cols());
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    Vector6d c[2] = {Vector6d::Zero(), Vector6d::Zero()};
    int cnt[2] = {0, 0};
    for (int i = 0; i < n; ++i) {
      const int k = (mask >> i) & 1;
      c[k] += x.col(i);
      ++cnt[k];
    }
    c[0] /= cnt[0];
    c[1] /= cnt[1];
    double cost = 0;
    for (int i = 0; i < n; ++i) cost += (x.col(i) - c[(mask >> i) & 1]).squaredNorm();
    if (cost < best) {
      best = cost;
      best_assign.assign(static_cast<std::size_t>(n), 0);
      for (int i = 0; i < n; ++i) best_assign[static_cast<std::size_t>(i)] = (mask >> i) & 1;
    }
  }
  return best;
}

}  // namespace

TEST(EmbedPose, Identity) {
  EXPECT_EQ(embed_pose(Pose::Identity(), 3.0), Vector6d::Zero());
}

TEST(EmbedPose, PureTranslation) {
  const Pose p(Eigen::Quaterniond::Identity(), Eigen::Vector3d(1, 2, 3));
  Vector6d e;
  e << 1, 2, 3, 0, 0, 0;
  EXPECT_EQ(embed_pose(p, 5.0), e);
}

TEST(EmbedPose, WeightedRotation) {
  const Pose p(Eigen::Quaterniond(Eigen::AngleAxisd(kPi / 2, Eigen::Vector3d::UnitZ())),
               Eigen::Vector3d::Zero());
  Vector6d e;
  e << 0, 0, 0, 0, 0, kPi;
  EXPECT_LT((embed_pose(p, 2.0) - e).norm(), 1e-12);
}

TEST(EmbedPose, RejectsNegativeWeight) {
  EXPECT_THROW(embed_pose(Pose::Identity(), -1.0), std::invalid_argument);
}

TEST(EmbedPose, ZeroWeightIgnoresOrientation) {
  const Pose a(Eigen::Quaterniond::Identity(), Eigen::Vector3d(1, 1, 1));
  const Pose b(Eigen::Quaterniond(Eigen::AngleAxisd(2.0, Eigen::Vector3d::UnitX())), Eigen::Vector3d(1, 1, 1));
  EXPECT_EQ((embed_pose(a, 0.0) - embed_pose(b, 0.0)).norm(), 0.0);
}

TEST(SelectSubset, KAtLeastNReturnsAll) {
  const Trajectory t = two_clusters(1);
  std::vector<FrameId> all(100);
  for (int i = 0; i < 100; ++i) all[static_cast<std::size_t>(i)] = i;
  EXPECT_EQ(select_optimal_subset(t, {100, 1.0, 42}), all);
  EXPECT_EQ(select_optimal_subset(t, {500, 1.0, 42}), all);
}

TEST(SelectSubset, RejectsBadInput) {
  EXPECT_THROW(select_optimal_subset(two_clusters(1), {0, 1.0, 42}), std::invalid_argument);
  EXPECT_THROW(select_optimal_subset(Trajectory{}, {1, 1.0, 42}), std::invalid_argument);
}

TEST(SelectSubset, TwoClustersGiveOneFrameEach) {
  const Trajectory t = two_clusters(2);
  const auto ids = select_optimal_subset(t, {2, 1.0, 42});
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_LT(ids[0], 50);
  EXPECT_GE(ids[1], 50);
}

TEST(SelectSubset, KMeansMatchesBruteForceOnSmallInstance) {
  // 12 frames in two loose groups; exhaustive search over 2^12 partitions.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 0.4);
  Trajectory t;
  for (int i = 0; i < 12; ++i) {
    const Eigen::Vector3d base = i % 2 ? Eigen::Vector3d(3, 1, 0) : Eigen::Vector3d(0, 0, 0);
    t.emplace_back(Eigen::Quaterniond::Identity(), base + Eigen::Vector3d(g(rng), g(rng), g(rng)),
                   std::nullopt, i);
  }
  const Matrix6Xd x = embed_trajectory(t, 1.0);
  std::vector<int> oracle;
  const double best = brute_force_two_means(x, oracle);
  const KMeansResult km = kmeans(x, 2, 42);
  EXPECT_NEAR(km.objective_history.back(), best, 1e-9);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j)
      EXPECT_EQ(km.assignment[static_cast<std::size_t>(i)] == km.assignment[static_cast<std::size_t>(j)],
                oracle[static_cast<std::size_t>(i)] == oracle[static_cast<std::size_t>(j)]);
}

TEST(SelectSubset, Deterministic) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-10, 10);
  Trajectory t;
  for (int i = 0; i < 300; ++i)
    t.emplace_back(Eigen::Quaterniond(Eigen::AngleAxisd(u(rng) / 4, Eigen::Vector3d::UnitZ())),
                   Eigen::Vector3d(u(rng), u(rng), u(rng)), std::nullopt, i);
  const SamplingParams p{25, 1.0, 99};
  EXPECT_EQ(select_optimal_subset(t, p), select_optimal_subset(t, p));
}

TEST(SelectSubset, ReturnedIdsBelongToInput) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10, 10);
  Trajectory t;
  std::set<FrameId> ids;
  for (int i = 0; i < 200; ++i) {
    t.emplace_back(Eigen::Quaterniond::Identity(), Eigen::Vector3d(u(rng), u(rng), u(rng)), std::nullopt,
                   1000 + 3 * i);
    ids.insert(1000 + 3 * i);
  }
  const auto out = select_optimal_subset(t, {17, 1.0, 1});
  EXPECT_LE(out.size(), 17u);
  EXPECT_EQ(out.size(), 17u);  // distinct embeddings
  for (FrameId id : out) EXPECT_TRUE(ids.count(id));
  EXPECT_TRUE(std::is_sorted(out.begin(), out.end()));
}

TEST(SelectSubset, OrientationWeightSwitchesClustering) {
  // Four frames: two positions x two headings. Position separation is 1 m,
  // heading separation is 2 rad.
  Trajectory t;
  const Eigen::Quaterniond h0 = Eigen::Quaterniond::Identity();
  const Eigen::Quaterniond h1(Eigen::AngleAxisd(2.0, Eigen::Vector3d::UnitZ()));
  t.emplace_back(h0, Eigen::Vector3d(0, 0, 0), std::nullopt, 0);
  t.emplace_back(h1, Eigen::Vector3d(0, 0, 0), std::nullopt, 1);
  t.emplace_back(h0, Eigen::Vector3d(1, 0, 0), std::nullopt, 2);
  t.emplace_back(h1, Eigen::Vector3d(1, 0, 0), std::nullopt, 3);
  const KMeansResult positional = kmeans(embed_trajectory(t, 0.0), 2, 7);
  EXPECT_EQ(positional.assignment[0], positional.assignment[1]);
  EXPECT_NE(positional.assignment[0], positional.assignment[2]);
  const KMeansResult orientational = kmeans(embed_trajectory(t, 100.0), 2, 7);
  EXPECT_EQ(orientational.assignment[0], orientational.assignment[2]);
  EXPECT_NE(orientational.assignment[0], orientational.assignment[1]);
}

TEST(KMeans, ObjectiveNonIncreasing) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix6Xd x(6, 500);
    for (Eigen::Index i = 0; i < x.cols(); ++i)
      for (int d = 0; d < 6; ++d) x(d, i) = u(rng);
    const KMeansResult r = kmeans(x, 12, static_cast<std::uint64_t>(trial));
    for (std::size_t i = 1; i < r.objective_history.size(); ++i)
      EXPECT_LE(r.objective_history[i], r.objective_history[i - 1] * (1 + 1e-12));
    EXPECT_LE(r.iterations, 100);
  }
}

TEST(KdTree, MatchesBruteForce) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::Matrix3Xd pts(3, 2000);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) pts.col(i) << u(rng), u(rng), u(rng);
  const KdTree tree(pts);
  for (int q = 0; q < 200; ++q) {
    const Eigen::Vector3d query(u(rng), u(rng), u(rng));
    Eigen::Index best = 0;
    (pts.colwise() - query).colwise().squaredNorm().minCoeff(&best);
    EXPECT_EQ(tree.nearest(query).index, best);
    const auto knn = tree.knn(query, 8);
    ASSERT_EQ(knn.size(), 8u);
    EXPECT_EQ(knn.front().index, best);
    for (std::size_t i = 1; i < knn.size(); ++i)
      EXPECT_LE(knn[i - 1].squared_distance, knn[i].squared_distance);
  }
}

TEST(KdTree, TiesResolveToLowestIndex) {
  Eigen::Matrix3Xd pts(3, 40);
  for (int i = 0; i < 40; ++i) pts.col(i) = (i % 2 ? 1.0 : -1.0) * Eigen::Vector3d::UnitX();
  const KdTree tree(pts, 2);
  EXPECT_EQ(tree.nearest(Eigen::Vector3d::Zero()).index, 0);
}
