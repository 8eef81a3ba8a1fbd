#pragma once

#include "rdc/depth_map.hpp"
#include "rdc/geometry.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace rdc {

/// Oriented square standing in for an isolated point during occlusion rendering.
struct Splat {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double half_size = 0;

  /// Corners in cyclic order. Edges follow the tangent basis built from the
  /// normal's smallest-magnitude axis crossed with the normal.
  std::array<Eigen::Vector3d, 4> corners() const;
};

/// One splat per cloud point whose nearest mesh vertex is farther than
/// `isolation_radius`, or per point when there is no mesh. `half_size`
/// defaults to twice the median nearest-neighbor spacing of the cloud.
/// Throws std::invalid_argument if the cloud has no normals.
std::vector<Splat> create_splats(const PointCloud& cloud, const TriangleMesh* mesh,
                                 double isolation_radius,
                                 std::optional<double> half_size = std::nullopt);

/// Median distance from each point to its nearest other point.
double median_spacing(const Eigen::Matrix3Xd& points);

/// Z-buffers one camera-frame triangle into `depth`. A pixel is covered when
/// its center lies inside the projected triangle (top-left rule on edges);
/// its depth is the exact ray/plane intersection along the pixel-center ray.
void rasterize_triangle(DepthMap& depth, const CameraIntrinsics& k, const Eigen::Vector3d& a,
                        const Eigen::Vector3d& b, const Eigen::Vector3d& c);

/// Occlusion depth of mesh triangles and splat quads seen from `pose`.
/// Nearest surface wins per pixel; empty geometry gives an all-invalid map.
DepthMap render_occlusion(const TriangleMesh* mesh, std::span<const Splat> splats,
                          const Pose& pose, const CameraIntrinsics& k);

struct GtRenderParams {
  /// Relative slack over the occlusion depth.
  double tolerance = 0.02;
  /// Absolute slack, meters. The larger of the two slacks applies.
  double absolute_slack = 0.05;
};

/// Projects every cloud point to its nearest pixel and keeps it when the
/// occlusion pixel is invalid or z <= occlusion + slack. Minimum z wins.
DepthMap render_gt_depth(const PointCloud& cloud, const DepthMap& occlusion, const Pose& pose,
                         const CameraIntrinsics& k, const GtRenderParams& params = {});

}  // namespace rdc
