#include "rdc/sampling.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

namespace rdc {

Vector6d embed_pose(const Pose& pose, double orientation_weight) {
  if (orientation_weight < 0) throw std::invalid_argument("orientation_weight must be >= 0");
  Vector6d e;
  e.head<3>() = pose.translation();
  e.tail<3>() = orientation_weight * rotation_vector(pose.rotation());
  return e;
}

Matrix6Xd embed_trajectory(const Trajectory& trajectory, double orientation_weight) {
  Matrix6Xd out(6, static_cast<Eigen::Index>(trajectory.size()));
  for (std::size_t i = 0; i < trajectory.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = embed_pose(trajectory[i], orientation_weight);
  return out;
}

namespace {

int nearest_centroid(const Matrix6Xd& centroids, const Vector6d& x, double* dist2) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.cols(); ++c) {
    const double d = (centroids.col(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist2) *dist2 = best_d;
  return best;
}

Matrix6Xd kmeanspp_init(const Matrix6Xd& data, int k, std::mt19937_64& rng) {
  const Eigen::Index n = data.cols();
  Matrix6Xd centroids(6, k);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centroids.col(0) = data.col(pick(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    d2[static_cast<std::size_t>(i)] = (data.col(i) - centroids.col(0)).squaredNorm();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    double total = 0;
    for (double v : d2) total += v;
    Eigen::Index chosen = 0;
    if (total > 0) {
      const double r = unit(rng) * total;
      double acc = 0;
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (acc > r && d2[static_cast<std::size_t>(i)] > 0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);  // every point already coincides with a centroid
    }
    centroids.col(c) = data.col(chosen);
    for (Eigen::Index i = 0; i < n; ++i)
      d2[static_cast<std::size_t>(i)] =
          std::min(d2[static_cast<std::size_t>(i)], (data.col(i) - centroids.col(c)).squaredNorm());
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const Matrix6Xd& data, int k, std::uint64_t seed, int max_iterations) {
  if (k <= 0) throw std::invalid_argument("k must be >= 1");
  if (data.cols() == 0) throw std::invalid_argument("k-means needs at least one point");
  const Eigen::Index n = data.cols();

  std::mt19937_64 rng(seed);
  KMeansResult r;
  r.centroids = kmeanspp_init(data, k, rng);
  r.assignment.assign(static_cast<std::size_t>(n), -1);

  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    double objective = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double d2 = 0;
      const int c = nearest_centroid(r.centroids, data.col(i), &d2);
      objective += d2;
      if (c != r.assignment[static_cast<std::size_t>(i)]) {
        r.assignment[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    r.objective_history.push_back(objective);
    r.iterations = it + 1;
    if (!changed) break;

    Matrix6Xd sums = Matrix6Xd::Zero(6, k);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = r.assignment[static_cast<std::size_t>(i)];
      sums.col(c) += data.col(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        r.centroids.col(c) = sums.col(c) / counts[static_cast<std::size_t>(c)];
  }
  return r;
}

std::vector<FrameId> select_optimal_subset(const Trajectory& trajectory,
                                           const SamplingParams& params) {
  if (params.k <= 0) throw std::invalid_argument("k must be >= 1");
  if (trajectory.empty()) throw std::invalid_argument("trajectory is empty");

  std::vector<FrameId> ids;
  if (static_cast<std::size_t>(params.k) >= trajectory.size()) {
    for (const Pose& p : trajectory) ids.push_back(p.frame_id());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  }

  const Matrix6Xd data = embed_trajectory(trajectory, params.orientation_weight);
  const KMeansResult km = kmeans(data, params.k, params.seed);

  std::set<FrameId> chosen;
  for (Eigen::Index c = 0; c < km.centroids.cols(); ++c) {
    double best_d = std::numeric_limits<double>::infinity();
    FrameId best_id = 0;
    bool found = false;
    for (Eigen::Index i = 0; i < data.cols(); ++i) {
      const double d = (data.col(i) - km.centroids.col(c)).squaredNorm();
      const FrameId id = trajectory[static_cast<std::size_t>(i)].frame_id();
      if (!found || d < best_d || (d == best_d && id < best_id)) {
        best_d = d;
        best_id = id;
        found = true;
      }
    }
    chosen.insert(best_id);
  }
  return {chosen.begin(), chosen.end()};
}

}  // namespace rdc
