#include "rdc/render.hpp"
#include "rdc/synth.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>
#include <set>

using namespace rdc;

namespace {

const CameraIntrinsics kCam{100, 100, 31.5, 23.5, 64, 48};

// Camera at `eye` looking along world -z, image rows toward world -y.
Pose looking_down(const Eigen::Vector3d& eye) {
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  return Pose(r, eye);
}

PointCloud grid_cloud(int side, double spacing, double z) {
  PointCloud c(Eigen::Matrix3Xd(3, side * side));
  c.normals = Eigen::Matrix3Xd(3, side * side);
  for (int i = 0; i < side * side; ++i) {
    c.points.col(i) << (i % side) * spacing, (i / side) * spacing, z;
    c.normals.col(i) = Eigen::Vector3d::UnitZ();
  }
  return c;
}

TriangleMesh grid_mesh(int side, double spacing, double z) {
  TriangleMesh m;
  m.vertices = grid_cloud(side, spacing, z).points;
  m.triangles.resize(3, 2 * (side - 1) * (side - 1));
  int f = 0;
  for (int y = 0; y + 1 < side; ++y)
    for (int x = 0; x + 1 < side; ++x) {
      const int a = y * side + x;
      m.triangles.col(f++) << a, a + 1, a + side + 1;
      m.triangles.col(f++) << a, a + side + 1, a + side;
    }
  return m;
}

}  // namespace

TEST(Rasterize, FullViewSplatGivesConstantDepth) {
  const Splat s{Eigen::Vector3d(0, 0, 5), Eigen::Vector3d(0, 0, -1), 100.0};
  const DepthMap d = render_occlusion(nullptr, std::span<const Splat>(&s, 1), Pose::Identity(), kCam);
  EXPECT_EQ(d.valid_count(), kCam.width * kCam.height);
  EXPECT_LT((d.values().array() - 5.0).abs().maxCoeff(), 1e-12);
}

TEST(Rasterize, NearestOfOverlappingSquaresWins) {
  const std::vector<Splat> s = {{Eigen::Vector3d(-0.2, 0, 4), Eigen::Vector3d(0, 0, -1), 0.5},
                                {Eigen::Vector3d(0.2, 0, 3), Eigen::Vector3d(0, 0, -1), 0.5}};
  const DepthMap d = render_occlusion(nullptr, s, Pose::Identity(), kCam);
  // Optical axis pixel is inside both squares.
  EXPECT_NEAR(d(31, 23), 3.0, 1e-12);
  EXPECT_NEAR(d(17, 23), 4.0, 1e-12);  // ray slope -0.145: only the far square
}

TEST(Rasterize, TiltedPlaneMatchesRayIntersection) {
  // Plane through (0, 0, 4) with normal n.
  const Eigen::Vector3d n = Eigen::Vector3d(0.3, -0.2, -1).normalized();
  const Eigen::Vector3d p0(0, 0, 4);
  const Eigen::Vector3d u = n.unitOrthogonal(), v = n.cross(u);
  DepthMap d(kCam.width, kCam.height);
  const double r = 50;
  rasterize_triangle(d, kCam, p0 + r * u, p0 + r * (-0.5 * u + 0.87 * v), p0 + r * (-0.5 * u - 0.87 * v));
  for (int y = 0; y < kCam.height; ++y)
    for (int x = 0; x < kCam.width; ++x) {
      ASSERT_TRUE(d.valid(x, y));
      const Eigen::Vector3d ray = pixel_ray(kCam, x, y);
      const double z = n.dot(p0) / n.dot(ray);
      EXPECT_NEAR(d(x, y), z, 1e-5);
    }
}

TEST(Rasterize, SharedEdgeCoversEachPixelOnce) {
  // Square with corners on pixel centers split along a diagonal through centers.
  const double z = 2;
  const auto at = [&](double px, double py) { return unproject(kCam, px, py, z); };
  const Eigen::Vector3d a = at(10, 10), b = at(30, 10), c = at(30, 30), e = at(10, 30);
  DepthMap first(kCam.width, kCam.height), second(kCam.width, kCam.height);
  rasterize_triangle(first, kCam, a, b, c);
  rasterize_triangle(second, kCam, a, c, e);
  for (int y = 0; y < kCam.height; ++y)
    for (int x = 0; x < kCam.width; ++x) EXPECT_FALSE(first.valid(x, y) && second.valid(x, y)) << x << "," << y;
  EXPECT_TRUE(first.valid(20, 20) || second.valid(20, 20));
  EXPECT_TRUE(first.valid(25, 15) && !second.valid(25, 15));
  EXPECT_TRUE(second.valid(15, 25) && !first.valid(15, 25));
}

TEST(Rasterize, ClipsTrianglesCrossingTheCamera) {
  DepthMap d(kCam.width, kCam.height);
  rasterize_triangle(d, kCam, Eigen::Vector3d(-1, -1, -1), Eigen::Vector3d(1, -1, 3), Eigen::Vector3d(0, 1, 3));
  for (int y = 0; y < kCam.height; ++y)
    for (int x = 0; x < kCam.width; ++x)
      if (d.valid(x, y)) EXPECT_GT(d(x, y), 0);
  EXPECT_GT(d.valid_count(), 0);
}

TEST(Rasterize, EmptyGeometryIsInvalid) {
  EXPECT_EQ(render_occlusion(nullptr, {}, Pose::Identity(), kCam).valid_count(), 0);
}

TEST(CreateSplats, FullyCoveredCloudHasNone) {
  const PointCloud c = grid_cloud(10, 0.1, 0);
  const TriangleMesh m = grid_mesh(10, 0.1, 0);
  EXPECT_TRUE(create_splats(c, &m, 0.05).empty());
}

TEST(CreateSplats, NoMeshSplatsEveryPoint) {
  const PointCloud c = grid_cloud(10, 0.1, 0);
  const auto s = create_splats(c, nullptr, 0.05);
  ASSERT_EQ(s.size(), 100u);
  EXPECT_NEAR(s[0].half_size, 0.2, 1e-12);  // twice the median spacing
  EXPECT_EQ(s[7].center, c.points.col(7));
}

TEST(CreateSplats, DisplacedPointIsIsolated) {
  PointCloud c = grid_cloud(10, 0.1, 0);
  const TriangleMesh m = grid_mesh(10, 0.1, 0);
  c.points.col(55).z() = 1.0;
  const auto s = create_splats(c, &m, 0.05, 0.03);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].center, c.points.col(55));
  EXPECT_EQ(s[0].half_size, 0.03);
}

TEST(CreateSplats, RequiresNormals) {
  EXPECT_THROW(create_splats(PointCloud(Eigen::Matrix3Xd::Zero(3, 3)), nullptr, 0.1), std::invalid_argument);
}

TEST(CreateSplats, CornersSpanSquare) {
  const Splat s{Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 1, 0).normalized(), 0.5};
  const auto c = s.corners();
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR((c[i] - s.center).dot(s.normal), 0, 1e-12);
    EXPECT_NEAR((c[i] - c[(i + 1) % 4]).norm(), 1.0, 1e-12);
  }
}

TEST(GtDepth, SinglePointInFrontIsKept) {
  PointCloud c(Eigen::Matrix3Xd(3, 1));
  c.points.col(0) << 0, 0, 5;
  DepthMap occ(kCam.width, kCam.height);
  occ.values().setConstant(10.0);
  const DepthMap d = render_gt_depth(c, occ, Pose::Identity(), kCam);
  EXPECT_EQ(d.valid_count(), 1);
  EXPECT_EQ(d(32, 24), 5.0);  // 31.5 rounds up to pixel 32
}

TEST(GtDepth, PointBehindOccluderIsDiscarded) {
  PointCloud c(Eigen::Matrix3Xd(3, 1));
  c.points.col(0) << 0, 0, 10;
  DepthMap occ(kCam.width, kCam.height);
  occ.values().setConstant(5.0);
  EXPECT_EQ(render_gt_depth(c, occ, Pose::Identity(), kCam).valid_count(), 0);
}

TEST(GtDepth, SlackKeepsPointsNearTheSurface) {
  PointCloud c(Eigen::Matrix3Xd(3, 2));
  c.points.col(0) << 0, 0, 5.09;   // within 2% of 5
  c.points.col(1) << 0.5, 0, 5.2;  // beyond both slacks
  DepthMap occ(kCam.width, kCam.height);
  occ.values().setConstant(5.0);
  const DepthMap d = render_gt_depth(c, occ, Pose::Identity(), kCam);
  EXPECT_EQ(d.valid_count(), 1);
  EXPECT_EQ(d(32, 24), 5.09);
}

TEST(GtDepth, InfiniteToleranceEqualsMinimumZ) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ux(-2, 2), uz(1, 8);
  PointCloud c(Eigen::Matrix3Xd(3, 5000));
  for (int i = 0; i < 5000; ++i) c.points.col(i) << ux(rng), ux(rng), uz(rng);
  DepthMap occ(kCam.width, kCam.height);
  occ.values().setConstant(0.5);
  GtRenderParams p;
  p.tolerance = std::numeric_limits<double>::infinity();
  const DepthMap d = render_gt_depth(c, occ, Pose::Identity(), kCam, p);

  DepthMap oracle(kCam.width, kCam.height);
  for (int i = 0; i < 5000; ++i) {
    const Eigen::Vector3d q = c.points.col(i);
    const double u = std::floor(kCam.fx * q.x() / q.z() + kCam.cx + 0.5);
    const double v = std::floor(kCam.fy * q.y() / q.z() + kCam.cy + 0.5);
    if (u < 0 || v < 0 || u >= kCam.width || v >= kCam.height) continue;
    double& cur = oracle(int(u), int(v));
    if (cur == 0 || q.z() < cur) cur = q.z();
  }
  EXPECT_EQ(d, oracle);
}

TEST(GtDepth, ValidCountMonotoneInTolerance) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ux(-2, 2), uz(2, 6);
  PointCloud c(Eigen::Matrix3Xd(3, 3000));
  for (int i = 0; i < 3000; ++i) c.points.col(i) << ux(rng), ux(rng), uz(rng);
  DepthMap occ(kCam.width, kCam.height);
  occ.values().setConstant(3.0);
  Eigen::Index previous = -1;
  for (double tol : {0.0, 0.01, 0.1, 0.3, 0.6, 1.0}) {
    GtRenderParams p;
    p.tolerance = tol;
    p.absolute_slack = 0;
    const Eigen::Index n = render_gt_depth(c, occ, Pose::Identity(), kCam, p).valid_count();
    EXPECT_GE(n, previous);
    previous = n;
  }
}

TEST(GtDepth, ValuesComeFromPointDepths) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(-2, 2), uz(2, 6);
  PointCloud c(Eigen::Matrix3Xd(3, 2000));
  std::set<double> zs;
  for (int i = 0; i < 2000; ++i) {
    c.points.col(i) << ux(rng), ux(rng), uz(rng);
    zs.insert(c.points(2, i));
  }
  const DepthMap d = render_gt_depth(c, DepthMap(kCam.width, kCam.height), Pose::Identity(), kCam);
  for (Eigen::Index i = 0; i < d.values().size(); ++i)
    if (d.values().data()[i] != 0) EXPECT_TRUE(zs.count(d.values().data()[i]));
}

TEST(GtDepth, SizeMismatchThrows) {
  EXPECT_THROW(render_gt_depth(PointCloud{}, DepthMap(10, 10), Pose::Identity(), kCam), std::invalid_argument);
}

TEST(GtDepth, TwoPlaneSceneHasNoSeeThrough) {
  const synth::SceneSpec scene = synth::two_plane_scene();
  const CameraIntrinsics cam{250, 250, 159.5, 119.5, 320, 240};
  const Pose pose = looking_down(Eigen::Vector3d(0.3, 0.2, 6));
  const PointCloud cloud = synth::sample_cloud(scene, 400000, 0.0, 5);
  const TriangleMesh mesh = synth::scene_mesh(scene, 0.2);
  const auto splats = create_splats(cloud, &mesh, 0.2);
  const DepthMap occ = render_occlusion(&mesh, splats, pose, cam);
  const DepthMap gt = render_gt_depth(cloud, occ, pose, cam);
  const DepthMap truth = synth::analytic_depth(scene, pose, cam);

  Eigen::Index valid = 0, close = 0, see_through = 0;
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      if (!gt.valid(x, y) || !truth.valid(x, y)) continue;
      ++valid;
      if (std::abs(gt(x, y) - truth(x, y)) <= 0.01 * truth(x, y)) ++close;
      // Back plane depth (6 m) behind a front plane pixel (4 m).
      if (truth(x, y) < 5 && gt(x, y) > 5) ++see_through;
    }
  ASSERT_GT(valid, cam.width * cam.height / 2);
  EXPECT_GE(double(close) / valid, 0.99);
  EXPECT_EQ(see_through, 0);
}
