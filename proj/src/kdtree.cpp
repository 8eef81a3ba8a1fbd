#include "rdc/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rdc {
namespace {

bool closer(const KdTree::Neighbor& a, const KdTree::Neighbor& b) {
  if (a.squared_distance != b.squared_distance) return a.squared_distance < b.squared_distance;
  return a.index < b.index;
}

}  // namespace

KdTree::KdTree(const Eigen::Matrix3Xd& points, int leaf_size)
    : points_(points), leaf_size_(std::max(1, leaf_size)) {
  order_.resize(static_cast<std::size_t>(points_.cols()));
  std::iota(order_.begin(), order_.end(), 0);
  if (!order_.empty()) {
    nodes_.reserve(2 * order_.size() / static_cast<std::size_t>(leaf_size_) + 2);
    build(0, static_cast<int>(order_.size()), 0);
  }
}

int KdTree::build(int begin, int end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) return id;

  // Split on the axis of largest extent.
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_.col(order_[static_cast<std::size_t>(i)]));
    hi = hi.cwiseMax(points_.col(order_[static_cast<std::size_t>(i)]));
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all points identical

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double pa = points_(axis, a), pb = points_(axis, b);
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_(axis, order_[static_cast<std::size_t>(mid)]);
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  Node& n = nodes_[static_cast<std::size_t>(id)];
  n.axis = axis;
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

KdTree::Neighbor KdTree::nearest(const Eigen::Vector3d& query) const {
  if (nodes_.empty()) throw std::logic_error("nearest-neighbor query on an empty tree");
  Neighbor best{-1, std::numeric_limits<double>::infinity()};
  search_nearest(0, query, best);
  return best;
}

void KdTree::search_nearest(int node, const Eigen::Vector3d& q, Neighbor& best) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.axis < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = order_[static_cast<std::size_t>(i)];
      const Neighbor cand{idx, (points_.col(idx) - q).squaredNorm()};
      if (best.index < 0 || closer(cand, best)) best = cand;
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const int near = diff < 0 ? n.left : n.right;
  const int far = diff < 0 ? n.right : n.left;
  search_nearest(near, q, best);
  // <= keeps equal-distance candidates reachable for the index tie-break.
  if (diff * diff <= best.squared_distance) search_nearest(far, q, best);
}

std::vector<KdTree::Neighbor> KdTree::knn(const Eigen::Vector3d& query, int k) const {
  std::vector<Neighbor> heap;
  if (nodes_.empty() || k <= 0) return heap;
  heap.reserve(static_cast<std::size_t>(k) + 1);
  search_knn(0, query, k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

void KdTree::search_knn(int node, const Eigen::Vector3d& q, int k,
                        std::vector<Neighbor>& heap) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  const auto full = [&] { return static_cast<int>(heap.size()) >= k; };
  if (n.axis < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = order_[static_cast<std::size_t>(i)];
      const Neighbor cand{idx, (points_.col(idx) - q).squaredNorm()};
      if (!full()) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const int near = diff < 0 ? n.left : n.right;
  const int far = diff < 0 ? n.right : n.left;
  search_knn(near, q, k, heap);
  if (!full() || diff * diff <= heap.front().squared_distance) search_knn(far, q, k, heap);
}

}  // namespace rdc
