#include "rdc/io.hpp"

#include <json.hpp>

#include <fstream>
#include <unordered_map>
#include <unordered_set>

namespace rdc {

using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string() + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

fs::path relative_to(const fs::path& p, const fs::path& base) {
  std::error_code ec;
  const fs::path r = fs::relative(p, base, ec);
  return ec || r.empty() ? p : r;
}

}  // namespace

CameraIntrinsics read_intrinsics(const fs::path& path) {
  const json j = read_json(path);
  try {
    return CameraIntrinsics(j.at("fx").get<double>(), j.at("fy").get<double>(),
                            j.at("cx").get<double>(), j.at("cy").get<double>(),
                            j.at("width").get<int>(), j.at("height").get<int>());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_intrinsics(const fs::path& path, const CameraIntrinsics& k) {
  write_json(path, json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
                        {"width", k.width}, {"height", k.height}});
}

std::set<FrameId> DatasetManifest::excluded_ids() const {
  std::set<FrameId> out;
  for (const auto& f : frames)
    if (!f.valid || f.interpolated_outlier) out.insert(f.id);
  return out;
}

DatasetManifest load_manifest(const fs::path& path) {
  const json j = read_json(path);
  const fs::path base = fs::absolute(path).parent_path();
  DatasetManifest m;
  try {
    m.intrinsics = base / j.at("intrinsics").get<std::string>();
    m.trajectory = base / j.at("trajectory").get<std::string>();
    m.depth_dir = base / j.at("depth_dir").get<std::string>();
    if (j.contains("image_dir") && !j.at("image_dir").is_null())
      m.image_dir = base / j.at("image_dir").get<std::string>();
    std::unordered_set<FrameId> seen;
    for (const json& f : j.at("frames")) {
      ManifestFrame mf;
      mf.id = f.at("id").get<FrameId>();
      mf.valid = f.value("valid", true);
      mf.interpolated_outlier = f.value("interpolated_outlier", false);
      if (!seen.insert(mf.id).second)
        throw FormatError(path.string() + ": duplicate frame id " + std::to_string(mf.id));
      m.frames.push_back(mf);
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  for (const fs::path& p : {m.intrinsics, m.trajectory})
    if (!fs::is_regular_file(p)) throw FormatError(path.string() + ": missing file " + p.string());
  if (!fs::is_directory(m.depth_dir))
    throw FormatError(path.string() + ": missing depth directory " + m.depth_dir.string());
  if (m.image_dir && !fs::is_directory(*m.image_dir))
    throw FormatError(path.string() + ": missing image directory " + m.image_dir->string());
  return m;
}

void save_manifest(const fs::path& path, const DatasetManifest& m) {
  const fs::path base = fs::absolute(path).parent_path();
  json j;
  j["intrinsics"] = relative_to(m.intrinsics, base).string();
  j["trajectory"] = relative_to(m.trajectory, base).string();
  j["depth_dir"] = relative_to(m.depth_dir, base).string();
  j["image_dir"] = m.image_dir ? json(relative_to(*m.image_dir, base).string()) : json(nullptr);
  j["frames"] = json::array();
  for (const auto& f : m.frames)
    j["frames"].push_back(
        {{"id", f.id}, {"valid", f.valid}, {"interpolated_outlier", f.interpolated_outlier}});
  write_json(path, j);
}

void export_kitti_odometry(const DatasetManifest& manifest, const fs::path& out_dir) {
  const Trajectory traj = read_tum(manifest.trajectory);
  const CameraIntrinsics k = read_intrinsics(manifest.intrinsics);
  std::unordered_map<FrameId, const Pose*> by_id;
  for (const auto& p : traj) by_id[p.frame_id()] = &p;

  Trajectory exported;
  for (const auto& f : manifest.frames) {
    const auto it = by_id.find(f.id);
    if (it == by_id.end())
      throw FormatError("export: frame " + std::to_string(f.id) + " has no pose in " +
                        manifest.trajectory.string());
    if (manifest.image_dir && !fs::is_regular_file(frame_file(*manifest.image_dir, f.id)))
      throw FormatError("export: missing image for frame " + std::to_string(f.id));
    exported.push_back(*it->second);
  }

  fs::create_directories(out_dir);
  write_kitti_poses(out_dir / "poses.txt", exported);

  {
    std::ofstream calib(out_dir / "calib.txt");
    calib.precision(17);
    for (int cam = 0; cam < 4; ++cam)
      calib << 'P' << cam << ": " << k.fx << " 0 " << k.cx << " 0 0 " << k.fy << ' ' << k.cy
            << " 0 0 0 1 0\n";
    calib << "Tr: 1 0 0 0 0 1 0 0 0 0 1 0\n";
  }
  {
    std::ofstream times(out_dir / "times.txt");
    times.precision(17);
    for (const auto& p : exported) times << p.timestamp().value_or(double(p.frame_id())) << '\n';
  }
  for (std::size_t i = 0; i < manifest.frames.size(); ++i) {
    const FrameId id = manifest.frames[i].id;
    const auto out_id = static_cast<FrameId>(i);
    if (manifest.image_dir) {
      fs::create_directories(out_dir / "image_0");
      fs::copy_file(frame_file(*manifest.image_dir, id), frame_file(out_dir / "image_0", out_id),
                    fs::copy_options::overwrite_existing);
    }
    const fs::path depth = frame_file(manifest.depth_dir, id);
    if (fs::is_regular_file(depth)) {
      fs::create_directories(out_dir / "depth");
      fs::copy_file(depth, frame_file(out_dir / "depth", out_id), fs::copy_options::overwrite_existing);
    }
  }
}

std::vector<FrameId> filter_eval_subset(const Trajectory& trajectory,
                                        const SubsetCriteria& criteria,
                                        const std::set<FrameId>& excluded) {
  std::vector<FrameId> out;
  const std::size_t n = trajectory.size();
  if (n < 2) return out;
  for (std::size_t i = 0; i < n; ++i) {
    const FrameId id = trajectory[i].frame_id();
    if (excluded.count(id)) continue;
    const Pose& a = trajectory[i + 1 < n ? i : i - 1];
    const Pose& b = trajectory[i + 1 < n ? i + 1 : i];
    const Eigen::Vector3d step = a.rotation().conjugate() * (b.translation() - a.translation());
    const double dist = step.norm();

    if (criteria.min_displacement && !(dist >= *criteria.min_displacement)) continue;
    if (criteria.max_forward_angle) {
      if (!(dist > 0)) continue;
      const double angle = std::atan2(step.head<2>().norm(), step.z());
      if (!(angle <= *criteria.max_forward_angle)) continue;
    }
    if (criteria.max_rotation && !(angular_distance(a.rotation(), b.rotation()) <= *criteria.max_rotation))
      continue;
    out.push_back(id);
  }
  return out;
}

}  // namespace rdc
