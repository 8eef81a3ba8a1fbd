#include "rdc/registration.hpp"

#include "rdc/kdtree.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace rdc {

Similarity umeyama_align(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst,
                         bool estimate_scale) {
  if (src.cols() != dst.cols())
    throw std::invalid_argument("umeyama_align: point sets differ in size");
  const Eigen::Index n = src.cols();
  if (n < 3) throw std::invalid_argument("umeyama_align: need at least 3 point pairs");

  const Eigen::Vector3d mean_src = src.rowwise().mean();
  const Eigen::Vector3d mean_dst = dst.rowwise().mean();
  const Eigen::Matrix3Xd src_c = src.colwise() - mean_src;
  const Eigen::Matrix3Xd dst_c = dst.colwise() - mean_dst;

  const Eigen::Matrix3d cov = dst_c * src_c.transpose() / double(n);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv[0] > 0) || sv[1] <= 1e-10 * sv[0])
    throw std::invalid_argument(
        "umeyama_align: degenerate configuration (collinear or coincident points)");

  Eigen::Vector3d sign = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) sign[2] = -1;
  const Eigen::Matrix3d rot = svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();

  double scale = 1.0;
  if (estimate_scale) {
    const double var_src = src_c.squaredNorm() / double(n);
    scale = sv.dot(sign) / var_src;
  }
  const Eigen::Vector3d trans = mean_dst - scale * rot * mean_src;
  return Similarity(scale, rot, trans);
}

void IcpParams::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(convergence_eps > 0)) throw std::invalid_argument("convergence_eps must be > 0");
  if (!(rejection_multiplier > 0))
    throw std::invalid_argument("rejection_multiplier must be > 0");
}

namespace {

struct Matches {
  std::vector<Eigen::Index> src, dst;
  double rmse = 0;
  double inlier_fraction = 0;
};

double median_of(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

Matches match(const Eigen::Matrix3Xd& moved, const PointCloud& dst, const KdTree& tree,
              const IcpParams& params) {
  const Eigen::Index n = moved.cols();
  std::vector<Eigen::Index> nn(static_cast<std::size_t>(n));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const KdTree::Neighbor nb = tree.nearest(moved.col(i));
    nn[static_cast<std::size_t>(i)] = nb.index;
    dist[static_cast<std::size_t>(i)] = std::sqrt(nb.squared_distance);
  }
  const double limit = params.rejection_multiplier * median_of(dist);

  Matches m;
  double sum_sq = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = dist[static_cast<std::size_t>(i)];
    if (d > limit) continue;
    const Eigen::Index j = nn[static_cast<std::size_t>(i)];
    m.src.push_back(i);
    m.dst.push_back(j);
    if (params.variant == IcpVariant::PointToPlane) {
      const double e = (moved.col(i) - dst.points.col(j)).dot(dst.normals.col(j));
      sum_sq += e * e;
    } else {
      sum_sq += d * d;
    }
  }
  if (m.src.empty()) throw RegistrationError("no correspondences survive rejection");
  m.rmse = std::sqrt(sum_sq / double(m.src.size()));
  m.inlier_fraction = double(m.src.size()) / double(n);
  return m;
}

// Closed-form update mapping matched moved points toward their partners.
std::optional<Similarity> solve_update(const Eigen::Matrix3Xd& moved, const PointCloud& dst,
                                       const Matches& m, const IcpParams& params) {
  const auto k = static_cast<Eigen::Index>(m.src.size());
  if (params.variant == IcpVariant::PointToPoint) {
    Eigen::Matrix3Xd a(3, k), b(3, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      a.col(i) = moved.col(m.src[static_cast<std::size_t>(i)]);
      b.col(i) = dst.points.col(m.dst[static_cast<std::size_t>(i)]);
    }
    try {
      return umeyama_align(a, b, params.estimate_scale);
    } catch (const std::invalid_argument&) {
      return std::nullopt;
    }
  }

  // Linearized about the centroid c of the matched points:
  //   x' = c + (1 + sigma) r + omega x r + tau,  r = x - c.
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (Eigen::Index i = 0; i < k; ++i) c += moved.col(m.src[static_cast<std::size_t>(i)]);
  c /= double(k);

  const int dof = params.estimate_scale ? 7 : 6;
  Eigen::MatrixXd jtj = Eigen::MatrixXd::Zero(dof, dof);
  Eigen::VectorXd jtr = Eigen::VectorXd::Zero(dof);
  Eigen::VectorXd row(dof);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Vector3d x = moved.col(m.src[static_cast<std::size_t>(i)]);
    const Eigen::Index j = m.dst[static_cast<std::size_t>(i)];
    const Eigen::Vector3d nrm = dst.normals.col(j);
    const Eigen::Vector3d r = x - c;
    row.head<3>() = r.cross(nrm);
    row.segment<3>(3) = nrm;
    if (dof == 7) row[6] = r.dot(nrm);
    const double e = (x - dst.points.col(j)).dot(nrm);
    jtj.noalias() += row * row.transpose();
    jtr.noalias() += row * e;
  }
  const Eigen::VectorXd delta = -jtj.ldlt().solve(jtr);
  if (!delta.allFinite()) return std::nullopt;
  const double scale = dof == 7 ? 1.0 + delta[6] : 1.0;
  if (!(scale > 0)) return std::nullopt;
  const Eigen::Quaterniond q = from_rotation_vector<double>(delta.head<3>());
  const Eigen::Vector3d t = c - scale * (q * c) + delta.segment<3>(3);
  return Similarity(scale, q, t);
}

}  // namespace

IcpResult icp(const PointCloud& src, const PointCloud& dst, const Similarity& init,
              const IcpParams& params) {
  params.validate();
  if (src.empty() || dst.empty()) throw std::invalid_argument("icp: clouds must be non-empty");
  if (params.variant == IcpVariant::PointToPlane && !dst.has_normals())
    throw std::invalid_argument("icp: point-to-plane needs normals on the target cloud");

  const KdTree tree(dst.points);
  IcpResult result;
  result.transform = init;
  Eigen::Matrix3Xd moved = init.apply(src.points);
  Matches current = match(moved, dst, tree, params);
  result.rmse_history.push_back(current.rmse);
  result.inlier_fraction = current.inlier_fraction;

  for (int it = 1; it <= params.max_iterations; ++it) {
    result.iterations_used = it;
    const std::optional<Similarity> update = solve_update(moved, dst, current, params);
    if (!update) break;
    const Similarity candidate = compose(*update, result.transform);
    Eigen::Matrix3Xd candidate_moved = candidate.apply(src.points);
    Matches next = match(candidate_moved, dst, tree, params);
    if (next.rmse > current.rmse) break;

    const double improvement = current.rmse - next.rmse;
    result.transform = candidate;
    moved = std::move(candidate_moved);
    current = std::move(next);
    result.rmse_history.push_back(current.rmse);
    result.inlier_fraction = current.inlier_fraction;
    if (improvement < params.convergence_eps) break;
  }
  return result;
}

PointCloud transfer_attributes(const PointCloud& src, const PointCloud& dst) {
  if (src.empty()) throw std::invalid_argument("transfer_attributes: source cloud is empty");
  const KdTree tree(src.points);
  PointCloud out = dst;
  if (src.has_normals()) out.normals.resize(3, dst.size());
  if (src.has_visibility()) out.visibility.assign(static_cast<std::size_t>(dst.size()), {});
  for (Eigen::Index i = 0; i < dst.size(); ++i) {
    const Eigen::Index j = tree.nearest(dst.points.col(i)).index;
    if (src.has_normals()) out.normals.col(i) = src.normals.col(j);
    if (src.has_visibility())
      out.visibility[static_cast<std::size_t>(i)] = src.visibility[static_cast<std::size_t>(j)];
  }
  return out;
}

Eigen::Matrix3Xd estimate_normals(const Eigen::Matrix3Xd& points, int k,
                                  const Eigen::Vector3d* viewpoint) {
  const KdTree tree(points);
  Eigen::Matrix3Xd normals(3, points.cols());
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const auto nbs = tree.knn(points.col(i), k);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& nb : nbs) mean += points.col(nb.index);
    mean /= double(nbs.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& nb : nbs) {
      const Eigen::Vector3d d = points.col(nb.index) - mean;
      cov.noalias() += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Eigen::Vector3d n = eig.eigenvectors().col(0);
    if (nbs.size() < 3 || !n.allFinite()) n = Eigen::Vector3d::UnitZ();
    if (viewpoint && n.dot(*viewpoint - points.col(i)) < 0) n = -n;
    normals.col(i) = n.normalized();
  }
  return normals;
}

PointCloud make_overlay(const PointCloud& src_transformed, const PointCloud& dst) {
  PointCloud out;
  const Eigen::Index a = src_transformed.size(), b = dst.size();
  out.points.resize(3, a + b);
  out.points.leftCols(a) = src_transformed.points;
  out.points.rightCols(b) = dst.points;
  out.colors.resize(3, a + b);
  out.colors.leftCols(a).row(0).setConstant(255);
  out.colors.leftCols(a).bottomRows(2).setZero();
  out.colors.rightCols(b).setConstant(255);
  return out;
}

}  // namespace rdc
