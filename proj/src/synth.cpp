#include "rdc/synth.hpp"

#include "rdc/io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <algorithm>
#include <stdexcept>

namespace rdc::synth {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

Pose pose_at(const Eigen::Vector3d& c, const Eigen::Quaterniond& q = Eigen::Quaterniond::Identity()) {
  return Pose(q, c);
}

double area(const Primitive& p) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Plane>) {
          return s.width * s.height;
        } else if constexpr (std::is_same_v<T, Sphere>) {
          return 4 * kPi * s.radius * s.radius;
        } else {
          const auto& d = s.size;
          return 2 * (d.x() * d.y() + d.y() * d.z() + d.z() * d.x());
        }
      },
      p);
}

std::optional<double> hit_plane(const Plane& p, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const Eigen::Vector3d ol = p.pose.to_camera(o);
  const Eigen::Vector3d dl = p.pose.rotation().conjugate() * d;
  if (dl.z() == 0) return std::nullopt;
  const double t = -ol.z() / dl.z();
  if (!(t > 0)) return std::nullopt;
  const Eigen::Vector3d x = ol + t * dl;
  if (std::abs(x.x()) > 0.5 * p.width || std::abs(x.y()) > 0.5 * p.height) return std::nullopt;
  return t;
}

std::optional<double> hit_sphere(const Sphere& s, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const Eigen::Vector3d oc = o - s.center;
  const double a = d.squaredNorm();
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - a * c;
  if (disc < 0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double t0 = (-b - sq) / a, t1 = (-b + sq) / a;
  if (t0 > 0) return t0;
  if (t1 > 0) return t1;
  return std::nullopt;
}

std::optional<double> hit_box(const Box& b, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const Eigen::Vector3d ol = b.pose.to_camera(o);
  const Eigen::Vector3d dl = b.pose.rotation().conjugate() * d;
  const Eigen::Vector3d half = 0.5 * b.size;
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (dl[i] == 0) {
      if (std::abs(ol[i]) > half[i]) return std::nullopt;
      continue;
    }
    double t1 = (-half[i] - ol[i]) / dl[i], t2 = (half[i] - ol[i]) / dl[i];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  }
  if (t_near > t_far) return std::nullopt;
  if (t_near > 0) return t_near;
  if (t_far > 0) return t_far;
  return std::nullopt;
}

Eigen::Vector3d parse_vec3(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

Eigen::Quaterniond parse_quat(const json& j, const char* key) {
  if (!j.contains(key)) return Eigen::Quaterniond::Identity();
  const json& q = j.at(key);
  return Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                            q.at(3).get<double>());
}

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
json quat_json(const Eigen::Quaterniond& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

// Adds a grid-subdivided rectangle centered at `c` spanned by half-axes a and b.
void add_rect(std::vector<Eigen::Vector3d>& verts, std::vector<Eigen::Vector3i>& tris,
              const Eigen::Vector3d& c, const Eigen::Vector3d& a, const Eigen::Vector3d& b,
              double max_edge) {
  const int na = std::max(1, static_cast<int>(std::ceil(2 * a.norm() / max_edge)));
  const int nb = std::max(1, static_cast<int>(std::ceil(2 * b.norm() / max_edge)));
  const int base = static_cast<int>(verts.size());
  for (int j = 0; j <= nb; ++j)
    for (int i = 0; i <= na; ++i)
      verts.push_back(c + a * (2.0 * i / na - 1) + b * (2.0 * j / nb - 1));
  for (int j = 0; j < nb; ++j)
    for (int i = 0; i < na; ++i) {
      const int v00 = base + j * (na + 1) + i, v10 = v00 + 1, v01 = v00 + na + 1, v11 = v01 + 1;
      tris.emplace_back(v00, v10, v11);
      tris.emplace_back(v00, v11, v01);
    }
}

}  // namespace

void SceneSpec::validate() const {
  if (primitives.empty()) throw std::invalid_argument("scene has no primitives");
  for (const auto& p : primitives) {
    std::visit(
        [](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Plane>) {
            if (!(s.width > 0 && s.height > 0)) throw std::invalid_argument("plane size must be positive");
          } else if constexpr (std::is_same_v<T, Sphere>) {
            if (!(s.radius > 0)) throw std::invalid_argument("sphere radius must be positive");
          } else {
            if (!(s.size.minCoeff() > 0)) throw std::invalid_argument("box size must be positive");
          }
        },
        p);
  }
}

SceneSpec two_plane_scene() {
  SceneSpec s;
  s.primitives.push_back(Plane{pose_at({0, 0, 0}), 8, 8});
  s.primitives.push_back(Plane{pose_at({0.5, 0.5, 2}), 2, 2});
  return s;
}

SceneSpec benchmark_scene() {
  SceneSpec s;
  // floor
  s.primitives.push_back(Plane{pose_at({0, 0, 0}), 6, 6});
  // walls facing the center
  s.primitives.push_back(Plane{pose_at({0, 3, 1.5}, Eigen::Quaterniond(Eigen::AngleAxisd(kPi / 2, Eigen::Vector3d::UnitX()))), 6, 3});
  s.primitives.push_back(Plane{pose_at({-3, 0, 1.5}, Eigen::Quaterniond(Eigen::AngleAxisd(kPi / 2, Eigen::Vector3d::UnitY()))), 6, 3});
  s.primitives.push_back(Box{pose_at({1.0, -0.5, 0.5}, Eigen::Quaterniond(Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitZ()))),
                             Eigen::Vector3d(1.2, 0.8, 1.0)});
  s.primitives.push_back(Sphere{{-1.0, 1.0, 0.7}, 0.7});
  return s;
}

SceneSpec read_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open file");
  SceneSpec s;
  try {
    const json j = json::parse(in);
    s.seed = j.value("seed", std::uint64_t{0});
    for (const json& p : j.at("primitives")) {
      const std::string type = p.at("type").get<std::string>();
      if (type == "plane") {
        const json& size = p.at("size");
        s.primitives.push_back(Plane{Pose(parse_quat(p, "rotation"), parse_vec3(p.at("center"))),
                                     size.at(0).get<double>(), size.at(1).get<double>()});
      } else if (type == "sphere") {
        s.primitives.push_back(Sphere{parse_vec3(p.at("center")), p.at("radius").get<double>()});
      } else if (type == "box") {
        s.primitives.push_back(Box{Pose(parse_quat(p, "rotation"), parse_vec3(p.at("center"))),
                                   parse_vec3(p.at("size"))});
      } else {
        throw std::runtime_error("unknown primitive type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  s.validate();
  return s;
}

void write_scene(const std::filesystem::path& path, const SceneSpec& scene) {
  json j;
  j["seed"] = scene.seed;
  j["primitives"] = json::array();
  for (const auto& p : scene.primitives) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Plane>) {
            j["primitives"].push_back({{"type", "plane"},
                                       {"center", vec_json(s.pose.translation())},
                                       {"rotation", quat_json(s.pose.rotation())},
                                       {"size", {s.width, s.height}}});
          } else if constexpr (std::is_same_v<T, Sphere>) {
            j["primitives"].push_back(
                {{"type", "sphere"}, {"center", vec_json(s.center)}, {"radius", s.radius}});
          } else {
            j["primitives"].push_back({{"type", "box"},
                                       {"center", vec_json(s.pose.translation())},
                                       {"rotation", quat_json(s.pose.rotation())},
                                       {"size", vec_json(s.size)}});
          }
        },
        p);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

std::optional<double> ray_cast(const SceneSpec& scene, const Eigen::Vector3d& origin,
                               const Eigen::Vector3d& dir) {
  std::optional<double> best;
  for (const auto& p : scene.primitives) {
    const std::optional<double> t = std::visit(
        [&](const auto& s) -> std::optional<double> {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Plane>) return hit_plane(s, origin, dir);
          else if constexpr (std::is_same_v<T, Sphere>) return hit_sphere(s, origin, dir);
          else return hit_box(s, origin, dir);
        },
        p);
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

DepthMap analytic_depth(const SceneSpec& scene, const Pose& pose, const CameraIntrinsics& k) {
  DepthMap depth(k.width, k.height);
  const Eigen::Matrix3d r = pose.rotation().toRotationMatrix();
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      // Camera-frame direction has unit z, so the ray parameter is the z-depth.
      const Eigen::Vector3d dir = r * pixel_ray(k, u, v);
      if (const auto t = ray_cast(scene, pose.translation(), dir)) depth(u, v) = *t;
    }
  }
  return depth;
}

PointCloud sample_cloud(const SceneSpec& scene, int n, double noise_sigma, std::uint64_t seed) {
  scene.validate();
  if (n < 1) throw std::invalid_argument("sample_cloud needs n >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> cumulative;
  double total = 0;
  for (const auto& p : scene.primitives) cumulative.push_back(total += area(p));

  PointCloud cloud;
  cloud.points.resize(3, n);
  cloud.normals.resize(3, n);
  for (int i = 0; i < n; ++i) {
    const double pick = unit(rng) * total;
    const std::size_t idx = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(),
                                 static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    Eigen::Vector3d p, nrm;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Plane>) {
            const Eigen::Vector3d local((unit(rng) - 0.5) * s.width, (unit(rng) - 0.5) * s.height, 0);
            p = s.pose.apply(local);
            nrm = s.pose.rotation() * Eigen::Vector3d::UnitZ();
          } else if constexpr (std::is_same_v<T, Sphere>) {
            Eigen::Vector3d g;
            do {
              g = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
            } while (g.norm() < 1e-12);
            nrm = g.normalized();
            p = s.center + s.radius * nrm;
          } else {
            const Eigen::Vector3d& d = s.size;
            const double faces[3] = {d.y() * d.z(), d.x() * d.z(), d.x() * d.y()};
            const double f = unit(rng) * (faces[0] + faces[1] + faces[2]);
            const int axis = f < faces[0] ? 0 : (f < faces[0] + faces[1] ? 1 : 2);
            const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
            Eigen::Vector3d local;
            for (int a = 0; a < 3; ++a) local[a] = (unit(rng) - 0.5) * d[a];
            local[axis] = sign * 0.5 * d[axis];
            p = s.pose.apply(local);
            nrm = s.pose.rotation() * (sign * Eigen::Vector3d::Unit(axis));
          }
        },
        scene.primitives[idx]);
    if (noise_sigma > 0) p += noise_sigma * Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
    cloud.points.col(i) = p;
    cloud.normals.col(i) = nrm.normalized();
  }
  return cloud;
}

TriangleMesh scene_mesh(const SceneSpec& scene, double max_edge, int sphere_segments) {
  if (!(max_edge > 0)) throw std::invalid_argument("max_edge must be positive");
  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> tris;
  for (const auto& prim : scene.primitives) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Plane>) {
            const Eigen::Matrix3d r = s.pose.rotation().toRotationMatrix();
            add_rect(verts, tris, s.pose.translation(), 0.5 * s.width * r.col(0),
                     0.5 * s.height * r.col(1), max_edge);
          } else if constexpr (std::is_same_v<T, Sphere>) {
            const int rings = std::max(4, sphere_segments / 2), segs = std::max(6, sphere_segments);
            const int base = static_cast<int>(verts.size());
            for (int i = 0; i <= rings; ++i) {
              const double theta = kPi * i / rings;
              for (int j = 0; j < segs; ++j) {
                const double phi = 2 * kPi * j / segs;
                verts.push_back(s.center + s.radius * Eigen::Vector3d(std::sin(theta) * std::cos(phi),
                                                                      std::sin(theta) * std::sin(phi),
                                                                      std::cos(theta)));
              }
            }
            for (int i = 0; i < rings; ++i)
              for (int j = 0; j < segs; ++j) {
                const int a = base + i * segs + j, b = base + i * segs + (j + 1) % segs;
                const int c = a + segs, d = b + segs;
                tris.emplace_back(a, c, b);
                tris.emplace_back(b, c, d);
              }
          } else {
            const Eigen::Matrix3d r = s.pose.rotation().toRotationMatrix();
            for (int axis = 0; axis < 3; ++axis) {
              const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
              for (double sign : {-1.0, 1.0}) {
                add_rect(verts, tris,
                         s.pose.translation() + sign * 0.5 * s.size[axis] * r.col(axis),
                         0.5 * s.size[a1] * r.col(a1), 0.5 * s.size[a2] * r.col(a2), max_edge);
              }
            }
          }
        },
        prim);
  }
  TriangleMesh mesh;
  mesh.vertices.resize(3, static_cast<Eigen::Index>(verts.size()));
  for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.col(static_cast<Eigen::Index>(i)) = verts[i];
  mesh.triangles.resize(3, static_cast<Eigen::Index>(tris.size()));
  for (std::size_t i = 0; i < tris.size(); ++i) mesh.triangles.col(static_cast<Eigen::Index>(i)) = tris[i];
  mesh.remove_degenerate();  // sphere poles
  return mesh;
}

TrajectoryKind parse_trajectory_kind(const std::string& name) {
  if (name == "orbit") return TrajectoryKind::Orbit;
  if (name == "dolly") return TrajectoryKind::Dolly;
  if (name == "grid") return TrajectoryKind::Grid;
  throw std::invalid_argument("unknown trajectory kind '" + name + "'");
}

Trajectory make_trajectory(TrajectoryKind kind, const TrajectoryParams& params, int n_frames,
                           std::uint64_t seed) {
  if (n_frames < 2) throw std::invalid_argument("a trajectory needs at least 2 frames");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Trajectory traj;
  traj.reserve(static_cast<std::size_t>(n_frames));

  const auto jitter = [&] {
    if (params.position_jitter <= 0) return Eigen::Vector3d(Eigen::Vector3d::Zero());
    return Eigen::Vector3d(params.position_jitter * Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng)));
  };

  switch (kind) {
    case TrajectoryKind::Orbit:
      for (int i = 0; i < n_frames; ++i) {
        const double a = 2 * kPi * i / n_frames;
        const Eigen::Vector3d eye =
            params.center + Eigen::Vector3d(params.radius * std::cos(a), params.radius * std::sin(a), params.height);
        traj.push_back(look_at(eye + jitter(), params.center, Eigen::Vector3d::UnitZ(), i));
      }
      break;
    case TrajectoryKind::Dolly: {
      const Eigen::Vector3d dir = (params.center - params.start).normalized();
      const Pose facing = look_at(params.start, params.center);
      for (int i = 0; i < n_frames; ++i) {
        const Eigen::Vector3d eye = params.start + dir * (params.length * i / (n_frames - 1));
        traj.emplace_back(facing.rotation(), eye + jitter(), std::nullopt, i);
      }
      break;
    }
    case TrajectoryKind::Grid: {
      if (params.rows < 1 || params.cols < 1) throw std::invalid_argument("grid needs rows, cols >= 1");
      std::vector<Eigen::Vector3d> waypoints;
      const double x0 = -0.5 * (params.cols - 1) * params.spacing;
      const double y0 = -0.5 * (params.rows - 1) * params.spacing;
      for (int r = 0; r < params.rows; ++r)
        for (int cc = 0; cc < params.cols; ++cc) {
          const int c = r % 2 == 0 ? cc : params.cols - 1 - cc;  // serpentine
          waypoints.push_back(params.center +
                              Eigen::Vector3d(x0 + c * params.spacing, y0 + r * params.spacing, params.height));
        }
      std::vector<double> arc{0.0};
      for (std::size_t i = 1; i < waypoints.size(); ++i)
        arc.push_back(arc.back() + (waypoints[i] - waypoints[i - 1]).norm());
      // Looking straight down with image +y toward world -y.
      Eigen::Matrix3d down;
      down << 1, 0, 0, 0, -1, 0, 0, 0, -1;
      for (int i = 0; i < n_frames; ++i) {
        Eigen::Vector3d eye = waypoints.front();
        if (waypoints.size() > 1) {
          const double s = arc.back() * i / (n_frames - 1);
          std::size_t seg = static_cast<std::size_t>(std::upper_bound(arc.begin(), arc.end(), s) - arc.begin());
          seg = std::clamp<std::size_t>(seg, 1, arc.size() - 1);
          const double len = arc[seg] - arc[seg - 1];
          const double t = len > 0 ? (s - arc[seg - 1]) / len : 0;
          eye = waypoints[seg - 1] + t * (waypoints[seg] - waypoints[seg - 1]);
        }
        traj.emplace_back(down, eye + jitter(), std::nullopt, i);
      }
      break;
    }
  }
  for (auto& p : traj) p = p.with_timestamp(p.frame_id() / params.fps);
  return traj;
}

void write_dataset(const SceneSpec& scene, const DatasetParams& params,
                   const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  scene.validate();
  params.intrinsics.validate();
  if (params.picked_pairs < 3) throw std::invalid_argument("need at least 3 picked pairs");
  const CameraIntrinsics& k = params.intrinsics;
  const Similarity& to_recon = params.world_to_reconstruction;
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  fs::create_directories(out_dir);

  write_scene(out_dir / "scene.json", scene);
  write_intrinsics(out_dir / "intrinsics.json", k);

  const Trajectory gt = make_trajectory(params.trajectory_kind, params.trajectory, params.frames,
                                        params.seed + 1);
  write_tum(out_dir / "gt_traj.tum", gt);

  const PointCloud lidar =
      sample_cloud(scene, params.lidar_points, params.lidar_noise, params.seed + 2);
  write_ply(out_dir / "lidar.ply", lidar);

  // Reconstruction cloud with the frames that observed each point.
  PointCloud dense = sample_cloud(scene, params.dense_points, params.dense_noise, params.seed + 3);
  dense.visibility.assign(static_cast<std::size_t>(dense.size()), {});
  const double visibility_slack = 0.01 + 3 * params.dense_noise;
  for (const Pose& pose : gt) {
    for (Eigen::Index i = 0; i < dense.points.cols(); ++i) {
      const Eigen::Vector3d p = dense.points.col(i);
      if (!project(k, pose.to_camera(p)).in_frame) continue;
      const Eigen::Vector3d dir = p - pose.translation();
      const double len = dir.norm();
      const auto t = ray_cast(scene, pose.translation(), dir);
      if (t && *t * len >= len - visibility_slack)
        dense.visibility[static_cast<std::size_t>(i)].push_back(pose.frame_id());
    }
  }
  write_ply(out_dir / "dense.ply", apply_similarity(to_recon, dense));
  write_ply(out_dir / "mesh.ply", apply_similarity(to_recon, scene_mesh(scene, params.mesh_max_edge)));

  // Picked pairs: reconstruction-side point (imprecise click) to lidar point.
  {
    std::uniform_int_distribution<Eigen::Index> pick(0, lidar.points.cols() - 1);
    Eigen::Matrix3Xd src(3, params.picked_pairs), dst(3, params.picked_pairs);
    for (int i = 0; i < params.picked_pairs; ++i) {
      const Eigen::Vector3d p = lidar.points.col(pick(rng));
      const Eigen::Vector3d click = p + params.picking_noise * Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
      src.col(i) = to_recon.apply(click);
      dst.col(i) = p;
    }
    write_point_pairs(out_dir / "pairs.txt", src, dst);
  }

  // Localized trajectory in the reconstruction frame, with noise and outliers.
  {
    Trajectory raw;
    for (const Pose& pose : gt) {
      Eigen::Vector3d c = pose.translation();
      c += params.localization_noise * Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
      if (std::find(params.outlier_frames.begin(), params.outlier_frames.end(), pose.frame_id()) !=
          params.outlier_frames.end())
        c += params.outlier_offset * Eigen::Vector3d(1, 1, 1).normalized();
      raw.push_back(to_recon.apply(Pose(pose.rotation(), c, pose.timestamp(), pose.frame_id())));
    }
    write_tum(out_dir / "raw_traj.tum", raw);
  }

  // Reference depth and up-to-scale predictions with consistent odometry.
  DatasetManifest manifest;
  manifest.intrinsics = out_dir / "intrinsics.json";
  manifest.trajectory = out_dir / "gt_traj.tum";
  manifest.depth_dir = out_dir / "depth";
  Trajectory pred_traj;
  for (const Pose& pose : gt) {
    const DepthMap depth = analytic_depth(scene, pose, k);
    write_depth_png16(frame_file(out_dir / "depth", pose.frame_id()), depth);
    DepthMap pred = depth;
    for (int v = 0; v < k.height; ++v)
      for (int u = 0; u < k.width; ++u)
        if (depth.valid(u, v))
          pred(u, v) = depth(u, v) * params.prediction_scale *
                       std::exp(params.prediction_log_sigma * gauss(rng));
    write_depth_png16(frame_file(out_dir / "pred", pose.frame_id()), pred);
    pred_traj.emplace_back(pose.rotation(), params.prediction_scale * pose.translation(),
                           pose.timestamp(), pose.frame_id());
    manifest.frames.push_back({pose.frame_id(), true, false});
  }
  write_tum(out_dir / "pred_traj.tum", pred_traj);
  save_manifest(out_dir / "manifest.json", manifest);
}

}  // namespace rdc::synth
