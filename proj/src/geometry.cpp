#include "rdc/geometry.hpp"

#include <string>

namespace rdc {

void PointCloud::validate() const {
  const Eigen::Index n = size();
  if (has_normals()) {
    if (normals.cols() != n) throw std::invalid_argument("normals count does not match points");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(normals.col(i).norm() - 1.0) > 1e-6)
        throw std::invalid_argument("normal " + std::to_string(i) + " is not unit length");
    }
  }
  if (has_visibility() && static_cast<Eigen::Index>(visibility.size()) != n)
    throw std::invalid_argument("visibility count does not match points");
  if (has_colors() && colors.cols() != n)
    throw std::invalid_argument("colors count does not match points");
}

void PointCloud::normalize_normals() {
  for (Eigen::Index i = 0; i < normals.cols(); ++i) {
    const double len = normals.col(i).norm();
    if (len > 0) normals.col(i) /= len;
  }
}

PointCloud PointCloud::subset(const std::vector<Eigen::Index>& indices) const {
  PointCloud out;
  const auto m = static_cast<Eigen::Index>(indices.size());
  out.points.resize(3, m);
  if (has_normals()) out.normals.resize(3, m);
  if (has_colors()) out.colors.resize(3, m);
  if (has_visibility()) out.visibility.reserve(indices.size());
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index i = indices[static_cast<std::size_t>(j)];
    out.points.col(j) = points.col(i);
    if (has_normals()) out.normals.col(j) = normals.col(i);
    if (has_colors()) out.colors.col(j) = colors.col(i);
    if (has_visibility()) out.visibility.push_back(visibility[static_cast<std::size_t>(i)]);
  }
  return out;
}

PointCloud apply_similarity(const Similarity& t, const PointCloud& cloud) {
  PointCloud out = cloud;
  out.points = t.apply(cloud.points);
  if (cloud.has_normals()) {
    out.normals = t.rotation().toRotationMatrix() * cloud.normals;
    out.normalize_normals();
  }
  return out;
}

void TriangleMesh::validate() const {
  const Eigen::Index m = vertices.cols();
  for (Eigen::Index f = 0; f < triangles.cols(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const int idx = triangles(k, f);
      if (idx < 0 || idx >= m)
        throw std::invalid_argument("triangle " + std::to_string(f) + " references vertex " +
                                    std::to_string(idx) + " but the mesh has " +
                                    std::to_string(m) + " vertices");
    }
  }
}

Eigen::Index TriangleMesh::remove_degenerate() {
  Eigen::Matrix3Xi kept(3, triangles.cols());
  Eigen::Index n = 0;
  for (Eigen::Index f = 0; f < triangles.cols(); ++f) {
    const Eigen::Vector3i t = triangles.col(f);
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    const Eigen::Vector3d a = vertices.col(t[0]), b = vertices.col(t[1]), c = vertices.col(t[2]);
    if ((b - a).cross(c - a).norm() == 0.0) continue;
    kept.col(n++) = t;
  }
  const Eigen::Index removed = triangles.cols() - n;
  triangles = kept.leftCols(n);
  return removed;
}

TriangleMesh apply_similarity(const Similarity& t, const TriangleMesh& mesh) {
  TriangleMesh out = mesh;
  out.vertices = t.apply(mesh.vertices);
  return out;
}

Pose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
             const Eigen::Vector3d& up, FrameId frame_id) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d x = z.cross(up);
  if (x.norm() < 1e-12) {
    // Looking along `up`: pick any perpendicular.
    x = z.cross(std::abs(z.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY());
  }
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Pose(r, eye, std::nullopt, frame_id);
}

}  // namespace rdc
