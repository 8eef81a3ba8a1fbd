#pragma once

#include "rdc/geometry.hpp"

#include <optional>
#include <vector>

namespace rdc {

/// Savitzky-Golay smoothing of a series stored one sample per row.
///
/// Interior samples take the center value of the degree-`polyorder` least
/// squares polynomial over a centered window. The first and last half-window
/// samples are evaluated at their own offset inside the first/last full window.
/// Throws std::invalid_argument for an even window, window <= polyorder or a
/// series shorter than the window.
Eigen::MatrixXd savgol_smooth(const Eigen::MatrixXd& series, int window, int polyorder);

/// Projection weights: row r evaluates the window fit at offset r.
Eigen::MatrixXd savgol_weights(int window, int polyorder);

struct FilterParams {
  int window = 9;
  int polyorder = 3;
  /// Meters per radian when mixing orientation into the residual.
  double orientation_weight = 1.0;
  /// Outlier threshold in meter-equivalents; nullopt selects the automatic rule.
  std::optional<double> threshold;
};

struct FilterReport {
  /// Smoothed trajectory with outliers replaced by interpolation.
  Trajectory smoothed;
  std::vector<FrameId> outlier_ids;
  /// Per input frame, distance between the raw and the final smoothed pose.
  std::vector<double> residuals;
  FilterParams params;
  /// Threshold actually applied (resolved when params.threshold is automatic).
  double threshold = 0;
};

/// 6D distance between two poses: sqrt(|dp|^2 + (w * angle)^2).
double pose_distance(const Pose& a, const Pose& b, double orientation_weight);

/// Automatic threshold: 5 x median residual, floored at 1 micrometer.
double auto_threshold(const std::vector<double>& residuals);

/// Smooths positions and quaternion components, flags frames whose raw pose
/// is farther than the threshold from the smoothed one and replaces them by
/// interpolating their nearest inlier neighbors.
///
/// Outliers are removed one at a time, worst first, re-smoothing after each
/// removal so a single gross outlier does not drag its neighbors over the
/// threshold.
FilterReport filter_trajectory(const Trajectory& trajectory, const FilterParams& params);

/// Linear position and spherical orientation interpolation, t in [0, 1].
Pose interpolate(const Pose& a, const Pose& b, double t);

}  // namespace rdc
