#pragma once

#include <Eigen/Core>

#include <vector>

namespace rdc {

/// Exact nearest-neighbor search over a fixed set of 3D points.
///
/// Ties in distance resolve to the lowest point index, so queries are
/// deterministic regardless of tree layout.
class KdTree {
 public:
  struct Neighbor {
    Eigen::Index index = -1;
    double squared_distance = 0;
  };

  explicit KdTree(const Eigen::Matrix3Xd& points, int leaf_size = 16);

  Eigen::Index size() const { return points_.cols(); }
  const Eigen::Matrix3Xd& points() const { return points_; }

  /// Nearest point to `query`. The tree must not be empty.
  Neighbor nearest(const Eigen::Vector3d& query) const;

  /// The k nearest points sorted by (distance, index).
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, int k) const;

 private:
  struct Node {
    int begin = 0, end = 0;  // range into order_ for leaves
    int left = -1, right = -1;
    int axis = -1;
    double split = 0;
  };

  int build(int begin, int end, int depth);
  void search_nearest(int node, const Eigen::Vector3d& q, Neighbor& best) const;
  void search_knn(int node, const Eigen::Vector3d& q, int k, std::vector<Neighbor>& heap) const;

  Eigen::Matrix3Xd points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int leaf_size_;
};

}  // namespace rdc
