#include "rdc/trajfilter.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rdc {

Eigen::MatrixXd savgol_weights(int window, int polyorder) {
  if (window <= 0 || window % 2 == 0) throw std::invalid_argument("window must be odd");
  if (polyorder < 0 || window <= polyorder)
    throw std::invalid_argument("window must be larger than polyorder");
  const int half = window / 2;
  Eigen::MatrixXd vander(window, polyorder + 1);
  for (int i = 0; i < window; ++i)
    for (int j = 0; j <= polyorder; ++j) vander(i, j) = std::pow(double(i - half), j);
  // Hat matrix Q Q^T of the thin QR factorization.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(vander);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(window, polyorder + 1);
  return q * q.transpose();
}

Eigen::MatrixXd savgol_smooth(const Eigen::MatrixXd& series, int window, int polyorder) {
  const Eigen::MatrixXd hat = savgol_weights(window, polyorder);
  const Eigen::Index n = series.rows();
  if (n < window)
    throw std::invalid_argument("series of length " + std::to_string(n) +
                                " is shorter than the window " + std::to_string(window));
  const int half = window / 2;
  Eigen::MatrixXd out(n, series.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i < half) {
      out.row(i) = hat.row(i) * series.topRows(window);
    } else if (i >= n - half) {
      out.row(i) = hat.row(window - (n - i)) * series.bottomRows(window);
    } else {
      out.row(i) = hat.row(half) * series.middleRows(i - half, window);
    }
  }
  return out;
}

double pose_distance(const Pose& a, const Pose& b, double orientation_weight) {
  const double dp = (a.translation() - b.translation()).norm();
  const double da = orientation_weight * angular_distance(a.rotation(), b.rotation());
  return std::hypot(dp, da);
}

double auto_threshold(const std::vector<double>& residuals) {
  if (residuals.empty()) return 1e-6;
  std::vector<double> r = residuals;
  const auto mid = r.begin() + static_cast<std::ptrdiff_t>(r.size() / 2);
  std::nth_element(r.begin(), mid, r.end());
  double median = *mid;
  if (r.size() % 2 == 0) median = 0.5 * (median + *std::max_element(r.begin(), mid));
  return std::max(5.0 * median, 1e-6);
}

Pose interpolate(const Pose& a, const Pose& b, double t) {
  const Eigen::Vector3d p = (1.0 - t) * a.translation() + t * b.translation();
  return Pose(a.rotation().slerp(t, b.rotation()), p, a.timestamp(), a.frame_id());
}

namespace {

// Index of the nearest inlier strictly before/after i, or -1.
struct Anchors {
  std::vector<int> prev, next;
};

Anchors find_anchors(const std::vector<bool>& outlier) {
  const int n = static_cast<int>(outlier.size());
  Anchors a{std::vector<int>(static_cast<std::size_t>(n), -1),
            std::vector<int>(static_cast<std::size_t>(n), -1)};
  int last = -1;
  for (int i = 0; i < n; ++i) {
    a.prev[static_cast<std::size_t>(i)] = last;
    if (!outlier[static_cast<std::size_t>(i)]) last = i;
  }
  last = -1;
  for (int i = n - 1; i >= 0; --i) {
    a.next[static_cast<std::size_t>(i)] = last;
    if (!outlier[static_cast<std::size_t>(i)]) last = i;
  }
  return a;
}

// Replaces outlier entries of `poses` by interpolating their inlier anchors.
Trajectory fill_outliers(const Trajectory& poses, const std::vector<bool>& outlier) {
  Trajectory out = poses;
  const Anchors anchors = find_anchors(outlier);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (!outlier[i]) continue;
    const int p = anchors.prev[i], q = anchors.next[i];
    Pose filled;
    if (p >= 0 && q >= 0) {
      const double t = double(static_cast<int>(i) - p) / double(q - p);
      filled = interpolate(poses[static_cast<std::size_t>(p)], poses[static_cast<std::size_t>(q)], t);
    } else {
      filled = poses[static_cast<std::size_t>(p >= 0 ? p : q)];
    }
    out[i] = Pose(filled.rotation(), filled.translation(), poses[i].timestamp(),
                  poses[i].frame_id());
  }
  return out;
}

Trajectory smooth_poses(const Trajectory& poses, int window, int polyorder) {
  const auto n = static_cast<Eigen::Index>(poses.size());
  Eigen::MatrixXd pos(n, 3), quat(n, 4);
  Eigen::Vector4d prev = Eigen::Vector4d::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Pose& p = poses[static_cast<std::size_t>(i)];
    pos.row(i) = p.translation().transpose();
    Eigen::Vector4d q = p.rotation().coeffs();  // x, y, z, w
    if (i > 0 && q.dot(prev) < 0) q = -q;      // sign continuity
    quat.row(i) = q.transpose();
    prev = q;
  }
  const Eigen::MatrixXd spos = savgol_smooth(pos, window, polyorder);
  const Eigen::MatrixXd squat = savgol_smooth(quat, window, polyorder);
  Trajectory out;
  out.reserve(poses.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector4d c = squat.row(i).transpose();
    const Eigen::Quaterniond q(c[3], c[0], c[1], c[2]);
    const Pose& src = poses[static_cast<std::size_t>(i)];
    out.emplace_back(q, Eigen::Vector3d(spos.row(i).transpose()), src.timestamp(),
                     src.frame_id());
  }
  return out;
}

}  // namespace

FilterReport filter_trajectory(const Trajectory& trajectory, const FilterParams& params) {
  savgol_weights(params.window, params.polyorder);  // validates window/polyorder
  if (static_cast<int>(trajectory.size()) < params.window)
    throw std::invalid_argument("trajectory of " + std::to_string(trajectory.size()) +
                                " frames is shorter than the window " +
                                std::to_string(params.window));
  if (params.threshold && !(*params.threshold >= 0))
    throw std::invalid_argument("threshold must be non-negative");

  const std::size_t n = trajectory.size();
  std::vector<bool> outlier(n, false);
  std::vector<double> residuals(n, 0.0);
  std::optional<double> threshold = params.threshold;
  Trajectory smoothed;

  for (;;) {
    smoothed = smooth_poses(fill_outliers(trajectory, outlier), params.window, params.polyorder);
    for (std::size_t i = 0; i < n; ++i)
      residuals[i] = pose_distance(trajectory[i], smoothed[i], params.orientation_weight);
    if (!threshold) threshold = auto_threshold(residuals);

    std::ptrdiff_t worst = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (outlier[i]) continue;
      if (worst < 0 || residuals[i] > residuals[static_cast<std::size_t>(worst)])
        worst = static_cast<std::ptrdiff_t>(i);
    }
    if (worst < 0 || !(residuals[static_cast<std::size_t>(worst)] > *threshold)) break;
    outlier[static_cast<std::size_t>(worst)] = true;
    if (std::find(outlier.begin(), outlier.end(), false) == outlier.end())
      throw std::runtime_error("every frame of the trajectory was flagged as an outlier");
  }

  FilterReport report;
  report.params = params;
  report.threshold = *threshold;
  report.smoothed = fill_outliers(smoothed, outlier);
  report.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    report.residuals[i] =
        pose_distance(trajectory[i], report.smoothed[i], params.orientation_weight);
    if (outlier[i]) report.outlier_ids.push_back(trajectory[i].frame_id());
  }
  return report;
}

}  // namespace rdc
