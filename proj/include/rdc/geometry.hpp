#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace rdc {

using FrameId = std::int64_t;

/// Rigid camera-to-world transform with optional timestamp and a frame id.
///
/// The rotation is kept unit-norm and on the w >= 0 hemisphere so that two
/// equal rotations always compare equal component-wise.
template <typename Scalar>
class Pose_ {
 public:
  using Quaternion = Eigen::Quaternion<Scalar>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;

  Pose_() = default;

  Pose_(const Quaternion& rotation, const Vector3& translation,
        std::optional<Scalar> timestamp = std::nullopt, FrameId frame_id = 0)
      : rotation_(canonical(rotation)),
        translation_(translation),
        timestamp_(timestamp),
        frame_id_(frame_id) {}

  Pose_(const Matrix3& rotation, const Vector3& translation,
        std::optional<Scalar> timestamp = std::nullopt, FrameId frame_id = 0)
      : Pose_(Quaternion(rotation), translation, timestamp, frame_id) {}

  static Pose_ Identity() { return Pose_(); }

  const Quaternion& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }
  std::optional<Scalar> timestamp() const { return timestamp_; }
  FrameId frame_id() const { return frame_id_; }

  Pose_ with_frame_id(FrameId id) const {
    Pose_ p = *this;
    p.frame_id_ = id;
    return p;
  }
  Pose_ with_timestamp(std::optional<Scalar> ts) const {
    Pose_ p = *this;
    p.timestamp_ = ts;
    return p;
  }

  /// Camera center in world coordinates.
  const Vector3& center() const { return translation_; }

  Vector3 apply(const Vector3& p) const { return rotation_ * p + translation_; }

  /// Maps a world point into this camera's frame.
  Vector3 to_camera(const Vector3& p_world) const {
    return rotation_.conjugate() * (p_world - translation_);
  }

  Pose_ inverse() const {
    const Quaternion qi = rotation_.conjugate();
    return Pose_(qi, -(qi * translation_), timestamp_, frame_id_);
  }

  /// World-to-camera transform, the inverse of the stored pose.
  Pose_ world_to_camera() const { return inverse(); }

  Matrix4 matrix() const {
    Matrix4 m = Matrix4::Identity();
    m.template topLeftCorner<3, 3>() = rotation_.toRotationMatrix();
    m.template topRightCorner<3, 1>() = translation_;
    return m;
  }

  template <typename Other>
  Pose_<Other> cast() const {
    std::optional<Other> ts;
    if (timestamp_) ts = static_cast<Other>(*timestamp_);
    return Pose_<Other>(rotation_.template cast<Other>(),
                        translation_.template cast<Other>(), ts, frame_id_);
  }

  static Quaternion canonical(const Quaternion& q) {
    Quaternion n = q.normalized();
    if (n.w() < Scalar(0)) n.coeffs() = -n.coeffs();
    return n;
  }

 private:
  Quaternion rotation_ = Quaternion::Identity();
  Vector3 translation_ = Vector3::Zero();
  std::optional<Scalar> timestamp_;
  FrameId frame_id_ = 0;
};

/// compose(a, b).apply(p) == a.apply(b.apply(p)). Metadata is taken from `a`.
template <typename Scalar>
Pose_<Scalar> compose(const Pose_<Scalar>& a, const Pose_<Scalar>& b) {
  return Pose_<Scalar>(a.rotation() * b.rotation(), a.apply(b.translation()),
                       a.timestamp(), a.frame_id());
}

template <typename Scalar>
Pose_<Scalar> invert(const Pose_<Scalar>& p) {
  return p.inverse();
}

/// Geodesic angle of a rotation, in [0, pi].
template <typename Scalar>
Scalar rotation_angle(const Eigen::Quaternion<Scalar>& q) {
  using std::atan2;
  const Scalar v = q.vec().norm();
  using std::abs;
  return Scalar(2) * atan2(v, abs(q.w()));
}

/// Geodesic angle between two rotations.
template <typename Scalar>
Scalar angular_distance(const Eigen::Quaternion<Scalar>& a,
                        const Eigen::Quaternion<Scalar>& b) {
  return rotation_angle(Eigen::Quaternion<Scalar>(a.conjugate() * b));
}

/// Rotation vector (axis * angle) with angle in [0, pi].
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> rotation_vector(const Eigen::Quaternion<Scalar>& q) {
  Eigen::Quaternion<Scalar> c = Pose_<Scalar>::canonical(q);
  const Scalar v = c.vec().norm();
  if (v == Scalar(0)) return Eigen::Matrix<Scalar, 3, 1>::Zero();
  const Scalar angle = Scalar(2) * std::atan2(v, c.w());
  return c.vec() * (angle / v);
}

template <typename Scalar>
Eigen::Quaternion<Scalar> from_rotation_vector(const Eigen::Matrix<Scalar, 3, 1>& w) {
  const Scalar angle = w.norm();
  if (angle == Scalar(0)) return Eigen::Quaternion<Scalar>::Identity();
  return Eigen::Quaternion<Scalar>(Eigen::AngleAxis<Scalar>(angle, w / angle));
}

/// Similarity transform p -> s * R * p + t.
template <typename Scalar>
class Similarity_ {
 public:
  using Quaternion = Eigen::Quaternion<Scalar>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;

  Similarity_() = default;

  Similarity_(Scalar scale, const Quaternion& rotation, const Vector3& translation)
      : scale_(scale),
        rotation_(Pose_<Scalar>::canonical(rotation)),
        translation_(translation) {
    if (!(scale > Scalar(0)))
      throw std::invalid_argument("similarity scale must be positive");
  }

  Similarity_(Scalar scale, const Matrix3& rotation, const Vector3& translation)
      : Similarity_(scale, Quaternion(rotation), translation) {}

  static Similarity_ Identity() { return Similarity_(); }

  static Similarity_ FromPose(const Pose_<Scalar>& p) {
    return Similarity_(Scalar(1), p.rotation(), p.translation());
  }

  Scalar scale() const { return scale_; }
  const Quaternion& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }

  Vector3 apply(const Vector3& p) const {
    return scale_ * (rotation_ * p) + translation_;
  }

  /// Applies to each column of a 3xN matrix.
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> apply(
      const Eigen::Matrix<Scalar, 3, Eigen::Dynamic>& pts) const {
    Eigen::Matrix<Scalar, 3, Eigen::Dynamic> out =
        (scale_ * rotation_.toRotationMatrix()) * pts;
    out.colwise() += translation_;
    return out;
  }

  Similarity_ inverse() const {
    const Quaternion qi = rotation_.conjugate();
    const Scalar si = Scalar(1) / scale_;
    return Similarity_(si, qi, -si * (qi * translation_));
  }

  Matrix4 matrix() const {
    Matrix4 m = Matrix4::Identity();
    m.template topLeftCorner<3, 3>() = scale_ * rotation_.toRotationMatrix();
    m.template topRightCorner<3, 1>() = translation_;
    return m;
  }

  /// Maps a camera-to-world pose through this transform; the result stays rigid.
  Pose_<Scalar> apply(const Pose_<Scalar>& p) const {
    return Pose_<Scalar>(rotation_ * p.rotation(), apply(p.translation()),
                         p.timestamp(), p.frame_id());
  }

 private:
  Scalar scale_ = Scalar(1);
  Quaternion rotation_ = Quaternion::Identity();
  Vector3 translation_ = Vector3::Zero();
};

/// compose(a, b).apply(p) == a.apply(b.apply(p)).
template <typename Scalar>
Similarity_<Scalar> compose(const Similarity_<Scalar>& a, const Similarity_<Scalar>& b) {
  return Similarity_<Scalar>(a.scale() * b.scale(), a.rotation() * b.rotation(),
                             a.apply(b.translation()));
}

using Pose = Pose_<double>;
using Similarity = Similarity_<double>;
using Trajectory = std::vector<Pose>;

/// Pinhole camera without distortion. Pixel centers sit at integer
/// coordinates, so pixel (i, j) covers [i - 0.5, i + 0.5) x [j - 0.5, j + 0.5).
struct CameraIntrinsics {
  double fx = 1, fy = 1, cx = 0, cy = 0;
  int width = 1, height = 1;

  CameraIntrinsics() = default;
  CameraIntrinsics(double fx_, double fy_, double cx_, double cy_, int width_, int height_)
      : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(width_), height(height_) {
    validate();
  }

  void validate() const {
    if (!(fx > 0 && fy > 0)) throw std::invalid_argument("focal lengths must be positive");
    if (width <= 0 || height <= 0) throw std::invalid_argument("image size must be positive");
    if (!(cx >= 0 && cx < width && cy >= 0 && cy < height))
      throw std::invalid_argument("principal point must lie inside the image");
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

struct Projection {
  double u = 0, v = 0, z = 0;
  bool in_frame = false;
};

inline Projection project(const CameraIntrinsics& k, const Eigen::Vector3d& p_cam) {
  Projection r;
  r.z = p_cam.z();
  if (!(r.z > 0)) return r;
  r.u = k.fx * p_cam.x() / r.z + k.cx;
  r.v = k.fy * p_cam.y() / r.z + k.cy;
  r.in_frame = r.u >= 0 && r.u < k.width && r.v >= 0 && r.v < k.height;
  return r;
}

/// Inverse of project at a known z-depth.
inline Eigen::Vector3d unproject(const CameraIntrinsics& k, double u, double v, double z) {
  return {(u - k.cx) / k.fx * z, (v - k.cy) / k.fy * z, z};
}

/// Camera-frame ray direction with unit z component through pixel (u, v).
inline Eigen::Vector3d pixel_ray(const CameraIntrinsics& k, double u, double v) {
  return unproject(k, u, v, 1.0);
}

/// Nearest pixel index for continuous image coordinates, if inside the image.
inline std::optional<Eigen::Vector2i> pixel_of(const CameraIntrinsics& k, double u, double v) {
  const double iu = std::floor(u + 0.5), iv = std::floor(v + 0.5);
  if (iu < 0 || iv < 0 || iu >= k.width || iv >= k.height) return std::nullopt;
  return Eigen::Vector2i(static_cast<int>(iu), static_cast<int>(iv));
}

/// Point cloud stored column-wise. Optional channels are either empty or
/// have exactly one entry per point.
struct PointCloud {
  Eigen::Matrix3Xd points;
  Eigen::Matrix3Xd normals;
  std::vector<std::vector<FrameId>> visibility;
  Eigen::Matrix<std::uint8_t, 3, Eigen::Dynamic> colors;

  PointCloud() = default;
  explicit PointCloud(Eigen::Matrix3Xd pts) : points(std::move(pts)) {}

  Eigen::Index size() const { return points.cols(); }
  bool empty() const { return points.cols() == 0; }
  bool has_normals() const { return normals.cols() > 0; }
  bool has_visibility() const { return !visibility.empty(); }
  bool has_colors() const { return colors.cols() > 0; }

  /// Throws if an optional channel has the wrong length or a normal is not unit.
  void validate() const;

  /// Rescales every normal to unit length; zero normals are left untouched.
  void normalize_normals();

  PointCloud subset(const std::vector<Eigen::Index>& indices) const;
};

/// p -> s R p + t on points; normals are rotated and renormalized.
PointCloud apply_similarity(const Similarity& t, const PointCloud& cloud);

/// Indexed triangle mesh.
struct TriangleMesh {
  Eigen::Matrix3Xd vertices;
  Eigen::Matrix3Xi triangles;

  bool empty() const { return triangles.cols() == 0; }

  /// Throws naming the first triangle with an out-of-range index.
  void validate() const;

  /// Drops zero-area triangles (repeated indices or collinear vertices).
  /// Returns the number removed.
  Eigen::Index remove_degenerate();
};

TriangleMesh apply_similarity(const Similarity& t, const TriangleMesh& mesh);

/// Look-at camera-to-world pose: camera +z toward `target`, +y roughly
/// opposite to `up` (image rows grow downward).
Pose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
             const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ(), FrameId frame_id = 0);

}  // namespace rdc
