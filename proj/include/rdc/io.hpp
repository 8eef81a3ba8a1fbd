#pragma once

#include "rdc/depth_map.hpp"
#include "rdc/geometry.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rdc {

namespace fs = std::filesystem;

/// Malformed or unsupported file content. The message names the file and,
/// for text formats, the line.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// PLY

enum class PlyFormat { Ascii, BinaryLittleEndian };

/// Vertex and face content of a PLY file. Recognized vertex properties are
/// x/y/z, nx/ny/nz, red/green/blue and the list `visible_frames`; faces use
/// `vertex_indices` (or `vertex_index`), polygons are fan-triangulated.
struct PlyData {
  PointCloud cloud;
  TriangleMesh mesh;  // vertices mirror cloud.points when faces exist
  bool has_faces = false;
};

/// Reads ASCII or binary little-endian PLY. Normals are renormalized, face
/// indices checked and zero-area triangles dropped.
PlyData read_ply(const fs::path& path);

PointCloud read_point_cloud(const fs::path& path);
TriangleMesh read_mesh(const fs::path& path);

/// Coordinates and normals are written as doubles so binary round trips are
/// exact.
void write_ply(const fs::path& path, const PointCloud& cloud,
               PlyFormat format = PlyFormat::BinaryLittleEndian);
void write_ply(const fs::path& path, const TriangleMesh& mesh,
               PlyFormat format = PlyFormat::BinaryLittleEndian);

// ---------------------------------------------------------------------------
// TUM trajectories: `timestamp tx ty tz qx qy qz qw`, '#' comments.

/// Frame ids are assigned in file order starting at 0.
Trajectory read_tum(const fs::path& path);
/// Poses without a timestamp are written with their frame id as timestamp.
void write_tum(const fs::path& path, const Trajectory& trajectory);

// ---------------------------------------------------------------------------
// 16-bit PNG depth: meters = value / 256, value 0 = invalid.

inline constexpr double kPng16Scale = 256.0;
inline constexpr double kPng16MaxDepth = 65535.0 / 256.0;

DepthMap read_depth_png16(const fs::path& path);
/// Returns the number of pixels clamped to the largest representable depth.
std::size_t write_depth_png16(const fs::path& path, const DepthMap& depth);

/// `<dir>/<frame id, 6 digits>.png`
fs::path frame_file(const fs::path& dir, FrameId id, const std::string& ext = ".png");

// ---------------------------------------------------------------------------
// Camera intrinsics JSON: {"fx", "fy", "cx", "cy", "width", "height"}.

CameraIntrinsics read_intrinsics(const fs::path& path);
void write_intrinsics(const fs::path& path, const CameraIntrinsics& k);

// ---------------------------------------------------------------------------
// Picked point pairs: `sx sy sz dx dy dz` per line.

std::pair<Eigen::Matrix3Xd, Eigen::Matrix3Xd> read_point_pairs(const fs::path& path);
void write_point_pairs(const fs::path& path, const Eigen::Matrix3Xd& src,
                       const Eigen::Matrix3Xd& dst);

/// Frame ids, one per line.
std::vector<FrameId> read_id_list(const fs::path& path);
void write_id_list(const fs::path& path, const std::vector<FrameId>& ids);

// ---------------------------------------------------------------------------
// Dataset manifest

struct ManifestFrame {
  FrameId id = 0;
  bool valid = true;
  bool interpolated_outlier = false;
};

/// Paths are absolute after loading; they are stored relative to the
/// manifest's directory on save.
struct DatasetManifest {
  fs::path intrinsics;
  fs::path trajectory;
  fs::path depth_dir;
  std::optional<fs::path> image_dir;
  std::vector<ManifestFrame> frames;

  std::set<FrameId> excluded_ids() const;
};

/// Throws FormatError when a referenced file is missing or ids repeat.
DatasetManifest load_manifest(const fs::path& path);
void save_manifest(const fs::path& path, const DatasetManifest& manifest);

// ---------------------------------------------------------------------------
// KITTI odometry export

/// Writes `poses.txt` (row-major 3x4 camera-to-world per line), `calib.txt`,
/// `times.txt`, and `image_0/`, `depth/` copies named by export index.
/// Throws FormatError when a manifest frame has no pose or image.
void export_kitti_odometry(const DatasetManifest& manifest, const fs::path& out_dir);

void write_kitti_poses(const fs::path& path, const Trajectory& trajectory);
/// Frame ids are assigned in file order starting at 0.
Trajectory read_kitti_poses(const fs::path& path);

// ---------------------------------------------------------------------------
// Evaluation subset

/// Conjunctive predicates on each frame's motion toward the next frame (the
/// last frame reuses the preceding step). Unset members are not checked.
struct SubsetCriteria {
  /// Max angle between the displacement and the optical axis, radians.
  std::optional<double> max_forward_angle;
  /// Max relative rotation angle, radians.
  std::optional<double> max_rotation;
  /// Min displacement, meters.
  std::optional<double> min_displacement;

  static constexpr double kDefaultForwardAngle = 10.0 * 3.14159265358979323846 / 180.0;
  static constexpr double kDefaultRotation = 1.0 * 3.14159265358979323846 / 180.0;
};

/// Ids of frames meeting every active criterion, excluding `excluded`.
std::vector<FrameId> filter_eval_subset(const Trajectory& trajectory,
                                        const SubsetCriteria& criteria,
                                        const std::set<FrameId>& excluded = {});

}  // namespace rdc
