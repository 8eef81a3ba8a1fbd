#pragma once

#include "rdc/geometry.hpp"

#include <cstdint>
#include <vector>

namespace rdc {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6Xd = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// (x, y, z) followed by orientation_weight * rotation vector. The weight is
/// in meters per radian, so both halves carry length units.
Vector6d embed_pose(const Pose& pose, double orientation_weight);

Matrix6Xd embed_trajectory(const Trajectory& trajectory, double orientation_weight);

struct KMeansResult {
  Matrix6Xd centroids;
  std::vector<int> assignment;
  /// Sum of squared distances to the assigned centroid, once per assignment step.
  std::vector<double> objective_history;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Stops once assignments do not
/// change or after `max_iterations`. Nearest-centroid ties go to the lower
/// centroid index; empty clusters keep their previous centroid.
KMeansResult kmeans(const Matrix6Xd& data, int k, std::uint64_t seed, int max_iterations = 100);

struct SamplingParams {
  int k = 1;
  double orientation_weight = 1.0;
  std::uint64_t seed = 42;
};

/// Frame ids of the trajectory frames nearest to each k-means centroid,
/// deduplicated and sorted ascending.
std::vector<FrameId> select_optimal_subset(const Trajectory& trajectory,
                                           const SamplingParams& params);

}  // namespace rdc
