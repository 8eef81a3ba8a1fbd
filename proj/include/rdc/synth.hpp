#pragma once

#include "rdc/depth_map.hpp"
#include "rdc/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rdc::synth {

/// Rectangle of `width` x `height` in the local xy plane, normal along local +z.
struct Plane {
  Pose pose;
  double width = 1, height = 1;
};

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1;
};

/// Box centered at the pose origin with edge lengths `size` along local axes.
struct Box {
  Pose pose;
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
};

using Primitive = std::variant<Plane, Sphere, Box>;

struct SceneSpec {
  std::vector<Primitive> primitives;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Large back plane at z = 0 with a smaller plane 2 m in front of it, both
/// facing +z.
SceneSpec two_plane_scene();

/// Floor, two walls, a box and a sphere: plane-rich and asymmetric.
SceneSpec benchmark_scene();

SceneSpec read_scene(const std::filesystem::path& path);
void write_scene(const std::filesystem::path& path, const SceneSpec& scene);

/// Ray parameter t of the nearest hit of origin + t * dir with t > 0.
std::optional<double> ray_cast(const SceneSpec& scene, const Eigen::Vector3d& origin,
                               const Eigen::Vector3d& dir);

/// Z-depth of the nearest hit through every pixel center.
DepthMap analytic_depth(const SceneSpec& scene, const Pose& pose, const CameraIntrinsics& k);

/// `n` points uniform over the total surface area with exact outward
/// normals, then isotropic Gaussian position noise. Deterministic per seed.
PointCloud sample_cloud(const SceneSpec& scene, int n, double noise_sigma, std::uint64_t seed);

/// Triangulation of the primitives. Planes and box faces are split into
/// cells no longer than `max_edge`; spheres use a latitude/longitude grid.
TriangleMesh scene_mesh(const SceneSpec& scene, double max_edge = 0.25, int sphere_segments = 32);

enum class TrajectoryKind { Orbit, Dolly, Grid };

TrajectoryKind parse_trajectory_kind(const std::string& name);

struct TrajectoryParams {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  /// Orbit: horizontal radius and height above `center`.
  double radius = 6, height = 5;
  /// Dolly: straight move of `length` from `start` toward `center`.
  Eigen::Vector3d start = Eigen::Vector3d(0, -8, 3);
  double length = 4;
  /// Grid: rows x cols lattice at `height` above `center`, camera facing down.
  int rows = 3, cols = 3;
  double spacing = 1;
  double fps = 30;
  /// Standard deviation of Gaussian noise added to camera centers, meters.
  double position_jitter = 0;
};

/// Smooth camera paths aimed at the scene center. Throws for n_frames < 2.
Trajectory make_trajectory(TrajectoryKind kind, const TrajectoryParams& params, int n_frames,
                           std::uint64_t seed);

struct DatasetParams {
  TrajectoryKind trajectory_kind = TrajectoryKind::Orbit;
  TrajectoryParams trajectory;
  int frames = 60;
  CameraIntrinsics intrinsics{250, 250, 159.5, 119.5, 320, 240};
  int lidar_points = 50000;
  int dense_points = 20000;
  /// Position noise of the lidar and reconstruction clouds, meters (world scale).
  double lidar_noise = 0.0;
  double dense_noise = 0.002;
  /// Similarity taking the world (lidar) frame into the reconstruction frame.
  Similarity world_to_reconstruction{0.5, Eigen::Quaterniond(Eigen::AngleAxisd(0.5, Eigen::Vector3d(1, 2, 3).normalized())),
                                     Eigen::Vector3d(1.0, -2.0, 0.5)};
  /// Per-axis noise on the localized trajectory, meters (world scale).
  double localization_noise = 0.005;
  /// Frames whose localization is displaced by `outlier_offset` meters.
  std::vector<FrameId> outlier_frames{17, 41};
  double outlier_offset = 1.0;
  /// Predictions are gt depth x prediction_scale x exp(N(0, prediction_log_sigma)).
  double prediction_scale = 0.5;
  double prediction_log_sigma = 0.05;
  int picked_pairs = 8;
  /// Noise on the picked reconstruction-side pair points, meters (world scale).
  double picking_noise = 0.02;
  double mesh_max_edge = 0.2;
  std::uint64_t seed = 7;
};

/// Writes a complete synthetic dataset: scene.json, intrinsics.json,
/// lidar.ply, dense.ply, mesh.ply, pairs.txt, raw_traj.tum, gt_traj.tum,
/// depth/, pred/, pred_traj.tum and manifest.json.
void write_dataset(const SceneSpec& scene, const DatasetParams& params,
                   const std::filesystem::path& out_dir);

}  // namespace rdc::synth
