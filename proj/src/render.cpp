#include "rdc/render.hpp"

#include "rdc/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rdc {
namespace {

constexpr double kNearPlane = 1e-3;

Eigen::Vector3d tangent_of(const Eigen::Vector3d& n) {
  int axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  return Eigen::Vector3d::Unit(axis).cross(n).normalized();
}

// Clips a convex polygon against z >= kNearPlane.
std::vector<Eigen::Vector3d> clip_near(const std::array<Eigen::Vector3d, 3>& tri) {
  std::vector<Eigen::Vector3d> out;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d& p = tri[static_cast<std::size_t>(i)];
    const Eigen::Vector3d& q = tri[static_cast<std::size_t>((i + 1) % 3)];
    const bool p_in = p.z() >= kNearPlane, q_in = q.z() >= kNearPlane;
    if (p_in) out.push_back(p);
    if (p_in != q_in) {
      const double t = (kNearPlane - p.z()) / (q.z() - p.z());
      Eigen::Vector3d x = p + t * (q - p);
      x.z() = kNearPlane;
      out.push_back(x);
    }
  }
  return out;
}

struct Edge {
  Eigen::Vector2d a, d;
  bool owns_boundary;
  double eval(const Eigen::Vector2d& p) const {
    return d.x() * (p.y() - a.y()) - d.y() * (p.x() - a.x());
  }
  bool covers(const Eigen::Vector2d& p) const {
    const double e = eval(p);
    return e > 0 || (e == 0 && owns_boundary);
  }
};

Edge make_edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d d = b - a;
  // With y pointing down and interior on the positive side, top edges run
  // in +x and left edges run in -y.
  return Edge{a, d, d.y() < 0 || (d.y() == 0 && d.x() > 0)};
}

void raster_projected(DepthMap& depth, const CameraIntrinsics& k, Eigen::Vector2d p0,
                      Eigen::Vector2d p1, Eigen::Vector2d p2, const Eigen::Vector3d& plane_n,
                      double plane_d) {
  const double area = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
  if (area == 0 || !std::isfinite(area)) return;
  if (area < 0) std::swap(p1, p2);
  const Edge e0 = make_edge(p0, p1), e1 = make_edge(p1, p2), e2 = make_edge(p2, p0);

  const double min_x = std::min({p0.x(), p1.x(), p2.x()});
  const double max_x = std::max({p0.x(), p1.x(), p2.x()});
  const double min_y = std::min({p0.y(), p1.y(), p2.y()});
  const double max_y = std::max({p0.y(), p1.y(), p2.y()});
  const int u0 = static_cast<int>(std::max(0.0, std::ceil(min_x)));
  const int u1 = static_cast<int>(std::min(double(k.width - 1), std::floor(max_x)));
  const int v0 = static_cast<int>(std::max(0.0, std::ceil(min_y)));
  const int v1 = static_cast<int>(std::min(double(k.height - 1), std::floor(max_y)));

  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      const Eigen::Vector2d p(u, v);
      if (!e0.covers(p) || !e1.covers(p) || !e2.covers(p)) continue;
      const Eigen::Vector3d ray = pixel_ray(k, u, v);
      const double denom = plane_n.dot(ray);
      if (denom == 0) continue;
      const double z = plane_d / denom;
      if (!(z > 0) || !std::isfinite(z)) continue;
      double& cur = depth(u, v);
      if (!DepthMap::is_valid(cur) || z < cur) cur = z;
    }
  }
}

}  // namespace

std::array<Eigen::Vector3d, 4> Splat::corners() const {
  const Eigen::Vector3d t = tangent_of(normal);
  const Eigen::Vector3d b = normal.cross(t);
  const double h = half_size;
  return {center + h * t + h * b, center - h * t + h * b, center - h * t - h * b,
          center + h * t - h * b};
}

double median_spacing(const Eigen::Matrix3Xd& points) {
  if (points.cols() < 2) return 0;
  const KdTree tree(points);
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const auto nbs = tree.knn(points.col(i), 2);
    d.push_back(std::sqrt(nbs.back().squared_distance));
  }
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

std::vector<Splat> create_splats(const PointCloud& cloud, const TriangleMesh* mesh,
                                 double isolation_radius, std::optional<double> half_size) {
  if (!cloud.has_normals()) throw std::invalid_argument("create_splats: cloud has no normals");
  if (!(isolation_radius >= 0)) throw std::invalid_argument("isolation_radius must be >= 0");

  double h = half_size.value_or(0.0);
  if (!half_size) {
    h = 2.0 * median_spacing(cloud.points);
    if (!(h > 0)) h = isolation_radius > 0 ? isolation_radius : 1e-3;
  }
  if (!(h > 0)) throw std::invalid_argument("splat half size must be positive");

  std::optional<KdTree> vertex_tree;
  if (mesh && mesh->vertices.cols() > 0) vertex_tree.emplace(mesh->vertices);

  std::vector<Splat> splats;
  const double r2 = isolation_radius * isolation_radius;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d p = cloud.points.col(i);
    if (vertex_tree && vertex_tree->nearest(p).squared_distance <= r2) continue;
    splats.push_back(Splat{p, cloud.normals.col(i).normalized(), h});
  }
  return splats;
}

void rasterize_triangle(DepthMap& depth, const CameraIntrinsics& k, const Eigen::Vector3d& a,
                        const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  Eigen::Vector3d n = (b - a).cross(c - a);
  if (n.squaredNorm() == 0) return;
  const double d = n.dot(a);  // plane: n . x = d
  const std::vector<Eigen::Vector3d> poly = clip_near({a, b, c});
  if (poly.size() < 3) return;
  std::vector<Eigen::Vector2d> px;
  px.reserve(poly.size());
  for (const auto& p : poly) px.emplace_back(k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy);
  for (std::size_t i = 1; i + 1 < px.size(); ++i) raster_projected(depth, k, px[0], px[i], px[i + 1], n, d);
}

DepthMap render_occlusion(const TriangleMesh* mesh, std::span<const Splat> splats,
                          const Pose& pose, const CameraIntrinsics& k) {
  DepthMap depth(k.width, k.height);
  if (mesh) {
    for (Eigen::Index f = 0; f < mesh->triangles.cols(); ++f) {
      const Eigen::Vector3i t = mesh->triangles.col(f);
      rasterize_triangle(depth, k, pose.to_camera(mesh->vertices.col(t[0])),
                         pose.to_camera(mesh->vertices.col(t[1])),
                         pose.to_camera(mesh->vertices.col(t[2])));
    }
  }
  for (const Splat& s : splats) {
    const auto c = s.corners();
    std::array<Eigen::Vector3d, 4> cam;
    for (std::size_t i = 0; i < 4; ++i) cam[i] = pose.to_camera(c[i]);
    rasterize_triangle(depth, k, cam[0], cam[1], cam[2]);
    rasterize_triangle(depth, k, cam[0], cam[2], cam[3]);
  }
  return depth;
}

DepthMap render_gt_depth(const PointCloud& cloud, const DepthMap& occlusion, const Pose& pose,
                         const CameraIntrinsics& k, const GtRenderParams& params) {
  if (occlusion.width() != k.width || occlusion.height() != k.height)
    throw std::invalid_argument("occlusion map is " + std::to_string(occlusion.width()) + "x" +
                                std::to_string(occlusion.height()) + " but the camera is " +
                                std::to_string(k.width) + "x" + std::to_string(k.height));
  DepthMap out(k.width, k.height);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const Projection pr = project(k, pose.to_camera(cloud.points.col(i)));
    if (!(pr.z > 0)) continue;
    const auto pix = pixel_of(k, pr.u, pr.v);
    if (!pix) continue;
    const int u = pix->x(), v = pix->y();
    if (occlusion.valid(u, v)) {
      const double occ = occlusion(u, v);
      const double slack = std::max(occ * params.tolerance, params.absolute_slack);
      if (pr.z > occ + slack) continue;
    }
    double& cur = out(u, v);
    if (!DepthMap::is_valid(cur) || pr.z < cur) cur = pr.z;
  }
  return out;
}

}  // namespace rdc
