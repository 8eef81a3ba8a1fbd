#pragma once

#include "rdc/geometry.hpp"

#include <stdexcept>
#include <vector>

namespace rdc {

/// Thrown when ICP is left without any correspondence to fit.
class RegistrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares similarity (or rigid when `estimate_scale` is false)
/// mapping src columns onto dst columns.
///
/// Rotation comes from the SVD of the cross-covariance with the reflection
/// correction. Throws std::invalid_argument for fewer than three pairs or a
/// collinear/coincident configuration.
Similarity umeyama_align(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst,
                         bool estimate_scale = true);

enum class IcpVariant { PointToPoint, PointToPlane };

struct IcpParams {
  IcpVariant variant = IcpVariant::PointToPlane;
  int max_iterations = 50;
  /// Stop once the RMSE improves by less than this, meters.
  double convergence_eps = 1e-6;
  /// Drop correspondences farther than multiplier x median correspondence distance.
  double rejection_multiplier = 3.0;
  bool estimate_scale = false;

  void validate() const;
};

struct IcpResult {
  Similarity transform;
  /// RMSE over accepted correspondences: entry 0 at the initial transform,
  /// then one per accepted update. Never increases.
  std::vector<double> rmse_history;
  int iterations_used = 0;
  double inlier_fraction = 0;
};

/// Refines `init` so that transform.apply(src) aligns with dst.
///
/// Each iteration matches transformed src points to their nearest dst point,
/// rejects far matches, and solves a closed-form update (Umeyama for
/// point-to-point, linearized small-angle least squares on dst normals for
/// point-to-plane). An update that would raise the RMSE is discarded and the
/// loop ends.
IcpResult icp(const PointCloud& src, const PointCloud& dst, const Similarity& init,
              const IcpParams& params);

/// Copies normals and visibility of the nearest src point onto each dst point.
PointCloud transfer_attributes(const PointCloud& src, const PointCloud& dst);

/// PCA normals from the k nearest neighbors. Signs are oriented toward
/// `viewpoint` when given, so normals face where the cloud was seen from.
Eigen::Matrix3Xd estimate_normals(const Eigen::Matrix3Xd& points, int k = 10,
                                  const Eigen::Vector3d* viewpoint = nullptr);

/// Overlay cloud for visual review: transformed src in red, dst in white.
PointCloud make_overlay(const PointCloud& src_transformed, const PointCloud& dst);

}  // namespace rdc
