#include "rdc/pipeline.hpp"

#include "rdc/plot.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

namespace rdc {

using nlohmann::json;

namespace {

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string() + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void store_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_json(const MetricRecord& m) {
  return {{"mae", m.mae},   {"mre", m.mre},       {"mle", m.mle},       {"sae", m.sae},
          {"sle", m.sle},   {"p_1.25", m.p125},   {"p_1.25^2", m.p125_2}, {"p_1.25^3", m.p125_3},
          {"sample_count", m.sample_count}};
}

json binned_json(const BinnedError& b) {
  json values = json::array();
  for (const auto& v : b.values) values.push_back(optional_json(v));
  return {{"edges", b.edges}, {"values", values}, {"counts", b.counts}};
}

std::vector<double> linear_edges(double lo, double hi, int count) {
  std::vector<double> e(static_cast<std::size_t>(count) + 1);
  for (int i = 0; i <= count; ++i) e[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / count;
  return e;
}

std::string scale_mode_name(ScaleMode m) { return m == ScaleMode::PerFrame ? "per-frame" : "global"; }
std::string fpv_units_name(FpvUnits u) { return u == FpvUnits::Pixels ? "pixels" : "radians"; }
std::string variant_name(IcpVariant v) {
  return v == IcpVariant::PointToPoint ? "point-to-point" : "point-to-plane";
}

}  // namespace

// ---------------------------------------------------------------------------
// Stages

std::vector<FrameId> sample_stage(const fs::path& trajectory, const SamplingParams& params,
                                  const fs::path& out) {
  const std::vector<FrameId> ids = select_optimal_subset(read_tum(trajectory), params);
  write_id_list(out, ids);
  return ids;
}

Similarity read_transform(const fs::path& path) {
  const json j = load_json(path);
  try {
    const json& q = j.at("quaternion");
    const json& t = j.at("translation");
    return Similarity(j.at("scale").get<double>(),
                      Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                         q.at(2).get<double>(), q.at(3).get<double>()),
                      Eigen::Vector3d(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_transform(const fs::path& path, const IcpResult& r) {
  const auto& q = r.transform.rotation();
  const auto& t = r.transform.translation();
  store_json(path, {{"scale", r.transform.scale()},
                    {"quaternion", {q.w(), q.x(), q.y(), q.z()}},
                    {"translation", {t.x(), t.y(), t.z()}},
                    {"rmse_history", r.rmse_history},
                    {"iterations_used", r.iterations_used},
                    {"inlier_fraction", r.inlier_fraction}});
}

IcpResult register_stage(const RegisterPaths& paths, const RegisterParams& params) {
  const PointCloud src = read_point_cloud(paths.src);
  PointCloud dst = read_point_cloud(paths.dst);

  Similarity init;
  bool scaled_init = false;
  if (paths.pairs) {
    const auto [ps, pd] = read_point_pairs(*paths.pairs);
    init = umeyama_align(ps, pd, true);
    scaled_init = true;
  }
  IcpParams icp_params = params.icp;
  icp_params.estimate_scale = params.estimate_scale.value_or(scaled_init);
  if (icp_params.variant == IcpVariant::PointToPlane && !dst.has_normals())
    dst.normals = estimate_normals(dst.points, params.normal_neighbors);

  const IcpResult result = icp(src, dst, init, icp_params);
  write_transform(paths.transform, result);

  const PointCloud moved = apply_similarity(result.transform, src);
  if (paths.overlay) write_ply(*paths.overlay, make_overlay(moved, dst));
  if (paths.registered) {
    const bool has_attributes = moved.has_normals() || moved.has_visibility();
    write_ply(*paths.registered, has_attributes ? transfer_attributes(moved, dst) : dst);
  }
  if (paths.mesh_in && paths.mesh_out)
    write_ply(*paths.mesh_out, apply_similarity(result.transform, read_mesh(*paths.mesh_in)));
  return result;
}

FilterReport filter_stage(const fs::path& in, const fs::path& out, const fs::path& report,
                          const FilterParams& params, const std::optional<fs::path>& transform) {
  Trajectory traj = read_tum(in);
  if (transform) {
    const Similarity t = read_transform(*transform);
    for (auto& p : traj) p = t.apply(p);
  }
  const FilterReport r = filter_trajectory(traj, params);
  write_tum(out, r.smoothed);
  store_json(report, {{"window", params.window},
                      {"polyorder", params.polyorder},
                      {"orientation_weight", params.orientation_weight},
                      {"threshold_mode", params.threshold ? "fixed" : "auto"},
                      {"threshold", r.threshold},
                      {"outlier_ids", r.outlier_ids},
                      {"residuals", r.residuals}});
  return r;
}

std::vector<FrameId> read_outlier_ids(const fs::path& report) {
  const json j = load_json(report);
  try {
    return j.at("outlier_ids").get<std::vector<FrameId>>();
  } catch (const json::exception& e) {
    throw FormatError(report.string() + ": " + e.what());
  }
}

std::size_t render_stage(const RenderPaths& paths, const RenderParams& params) {
  const PointCloud cloud = read_point_cloud(paths.cloud);
  std::optional<TriangleMesh> mesh;
  if (paths.mesh) mesh = read_mesh(*paths.mesh);
  const Trajectory traj = read_tum(paths.trajectory);
  const CameraIntrinsics k = read_intrinsics(paths.intrinsics);
  std::set<FrameId> outliers;
  if (paths.filter_report)
    for (FrameId id : read_outlier_ids(*paths.filter_report)) outliers.insert(id);

  const std::vector<Splat> splats =
      create_splats(cloud, mesh ? &*mesh : nullptr, params.isolation_radius, params.half_size);

  fs::create_directories(paths.out_dir);
  // Frames are independent; each worker writes its own files.
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i; (i = next++) < traj.size();) {
      try {
        const Pose& pose = traj[i];
        const DepthMap occ = render_occlusion(mesh ? &*mesh : nullptr, splats, pose, k);
        write_depth_png16(frame_file(paths.out_dir, pose.frame_id()),
                          render_gt_depth(cloud, occ, pose, k, params.gt));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = traj.size();
      }
    }
  };
  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(traj.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  DatasetManifest manifest;
  manifest.intrinsics = fs::absolute(paths.intrinsics);
  manifest.trajectory = fs::absolute(paths.trajectory);
  manifest.depth_dir = fs::absolute(paths.out_dir);
  for (const Pose& p : traj) manifest.frames.push_back({p.frame_id(), true, outliers.count(p.frame_id()) > 0});
  save_manifest(paths.out_dir / "manifest.json", manifest);
  return traj.size();
}

MetricRecord evaluate_stage(const EvaluatePaths& paths, const EvaluateParams& params) {
  const CameraIntrinsics k = read_intrinsics(paths.intrinsics);
  const Trajectory gt_traj = read_tum(paths.trajectory);
  const Trajectory pred_traj = read_tum(paths.pred_trajectory);
  std::set<FrameId> excluded;
  if (fs::is_regular_file(paths.gt_dir / "manifest.json"))
    excluded = load_manifest(paths.gt_dir / "manifest.json").excluded_ids();

  const ScaleRecovery scales = recover_scale(pred_traj, gt_traj, params.scale);
  std::vector<FrameDepth> gt, est;
  for (const Pose& pose : gt_traj) {
    const FrameId id = pose.frame_id();
    const fs::path g = frame_file(paths.gt_dir, id), e = frame_file(paths.pred_dir, id);
    const auto s = scales.scale.find(id);
    if (excluded.count(id) || s == scales.scale.end() || !fs::is_regular_file(g) || !fs::is_regular_file(e))
      continue;
    gt.push_back({id, read_depth_png16(g)});
    DepthMap pred = read_depth_png16(e);
    pred.values() *= s->second;
    est.push_back({id, std::move(pred)});
  }
  if (gt.empty()) throw std::runtime_error("no frame has both ground truth and prediction");

  const std::vector<EvaluationSample> samples = pool_samples(gt, est, gt_traj, k, excluded);
  const MetricRecord metrics = scalar_metrics(samples);

  const std::vector<double> depth_edges = default_depth_bins(samples, params.depth_bins);
  const BinnedError depth_hist = depth_wise_histogram(samples, depth_edges, params.error);
  const std::vector<double> ratio_edges = default_ratio_bins(samples, params.ratio_bins);
  const RatioHistogram ratio_hist = log_ratio_histogram(samples, ratio_edges);

  double fpv_max = 0;
  for (const auto& s : samples) {
    const auto& d = params.fpv_units == FpvUnits::Pixels ? s.fpv_pixels : s.fpv_radians;
    if (d) fpv_max = std::max(fpv_max, *d);
  }
  std::optional<BinnedError> fpv_hist;
  if (fpv_max > 0) {
    const std::vector<double> fpv_edges = linear_edges(0, fpv_max, params.fpv_bins);
    fpv_hist = fpv_metric(samples, fpv_edges, params.fpv_units, params.error);
  }

  json skipped = scales.skipped;
  json report = {
      {"units",
       {{"mae", "meters"}, {"sae", "meters"}, {"mre", "unitless"}, {"mle", "natural log"},
        {"sle", "natural log"}, {"ratio_histogram", "log10(est / gt)"},
        {"depth_histogram", "ground-truth depth, meters"}, {"fpv_histogram", fpv_units_name(params.fpv_units)}}},
      {"metrics", metrics_json(metrics)},
      {"frames_evaluated", gt.size()},
      {"excluded_frames", excluded},
      {"scale", {{"mode", scale_mode_name(params.scale)}, {"global", scales.global}, {"skipped", skipped}}},
      {"depth_histogram", binned_json(depth_hist)},
      {"ratio_histogram",
       {{"edges", ratio_hist.edges},
        {"values", ratio_hist.fraction},
        {"quantiles",
         {{"0.025", ratio_hist.quantiles[0]}, {"0.25", ratio_hist.quantiles[1]}, {"0.5", ratio_hist.quantiles[2]},
          {"0.75", ratio_hist.quantiles[3]}, {"0.975", ratio_hist.quantiles[4]}}}}},
      {"fpv_histogram", fpv_hist ? binned_json(*fpv_hist) : json(nullptr)},
      {"error_function", to_string(params.error)}};
  report["depth_histogram"]["error_function"] = to_string(params.error);
  store_json(paths.report, report);

  if (paths.plots_dir) {
    const std::string err = to_string(params.error);
    write_bar_chart_svg(*paths.plots_dir / "depth_error.svg", "Depth-wise error", "ground-truth depth (m)",
                        err, depth_hist.edges, depth_hist.values, true);
    std::vector<std::optional<double>> fractions(ratio_hist.fraction.begin(), ratio_hist.fraction.end());
    write_bar_chart_svg(*paths.plots_dir / "log_ratio.svg", "Log-ratio distribution", "log10(est / gt)",
                        "fraction", ratio_hist.edges, fractions);
    if (fpv_hist)
      write_bar_chart_svg(*paths.plots_dir / "fpv_error.svg", "Error vs distance to FPV",
                          "distance to FPV (" + fpv_units_name(params.fpv_units) + ")", err, fpv_hist->edges,
                          fpv_hist->values);
  }
  return metrics;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

const std::vector<std::string> kStageOrder{"sample", "register", "filter-traj", "render", "evaluate"};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string relative_string(const fs::path& p, const fs::path& base) {
  std::error_code ec;
  const fs::path r = fs::relative(p, base, ec);
  return (ec || r.empty() ? p : r).string();
}

json stage_params(const PipelineConfig& c, const std::string& stage) {
  if (stage == "sample")
    return {{"k", c.sample.k}, {"orientation_weight", c.sample.orientation_weight}, {"seed", c.sample.seed}};
  if (stage == "register") {
    const IcpParams& p = c.registration.icp;
    return {{"variant", variant_name(p.variant)},
            {"max_iterations", p.max_iterations},
            {"convergence_eps", p.convergence_eps},
            {"rejection_multiplier", p.rejection_multiplier},
            {"estimate_scale", c.registration.estimate_scale ? json(*c.registration.estimate_scale) : json("auto")},
            {"normal_neighbors", c.registration.normal_neighbors}};
  }
  if (stage == "filter-traj")
    return {{"window", c.filter.window},
            {"polyorder", c.filter.polyorder},
            {"orientation_weight", c.filter.orientation_weight},
            {"threshold", c.filter.threshold ? json(*c.filter.threshold) : json("auto")}};
  if (stage == "render")
    return {{"tolerance", c.render.gt.tolerance},
            {"absolute_slack", c.render.gt.absolute_slack},
            {"isolation_radius", c.render.isolation_radius},
            {"half_size", c.render.half_size ? json(*c.render.half_size) : json("auto")}};
  return {{"scale", scale_mode_name(c.evaluate.scale)},
          {"error", to_string(c.evaluate.error)},
          {"depth_bins", c.evaluate.depth_bins},
          {"ratio_bins", c.evaluate.ratio_bins},
          {"fpv_bins", c.evaluate.fpv_bins},
          {"fpv_units", fpv_units_name(c.evaluate.fpv_units)}};
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

std::optional<double> auto_or_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (j.at(key).is_string()) {
    if (j.at(key).get<std::string>() == "auto") return std::nullopt;
    throw ValidationError(std::string(key) + " must be a number or \"auto\"");
  }
  return j.at(key).get<double>();
}

struct StageIo {
  std::vector<fs::path> inputs;
  std::vector<std::pair<fs::path, std::string>> produced_inputs;  // path, producing stage
};

StageIo stage_io(const PipelineConfig& c, const std::string& stage) {
  const StageArtifacts a(c.paths.output);
  StageIo io;
  if (stage == "sample") {
    io.inputs = {c.paths.raw_trajectory};
  } else if (stage == "register") {
    io.inputs = {c.paths.dense, c.paths.lidar};
    if (c.paths.pairs) io.inputs.push_back(*c.paths.pairs);
    if (c.paths.mesh) io.inputs.push_back(*c.paths.mesh);
  } else if (stage == "filter-traj") {
    io.inputs = {c.paths.raw_trajectory};
    io.produced_inputs = {{a.transform(), "register"}};
  } else if (stage == "render") {
    io.inputs = {c.paths.intrinsics};
    io.produced_inputs = {{a.registered(), "register"}, {a.smooth(), "filter-traj"}, {a.filter_report(), "filter-traj"}};
    if (c.paths.mesh) io.produced_inputs.emplace_back(a.mesh(), "register");
  } else {
    io.inputs = {c.paths.intrinsics};
    if (c.paths.predictions) io.inputs.push_back(*c.paths.predictions);
    if (c.paths.pred_trajectory) io.inputs.push_back(*c.paths.pred_trajectory);
    io.produced_inputs = {{a.depth_dir(), "render"}, {a.smooth(), "filter-traj"}};
  }
  return io;
}

// FNV-1a over a string.
std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string file_signature(const fs::path& p) {
  std::error_code ec;
  if (fs::is_directory(p, ec)) {
    std::vector<std::string> parts;
    for (const auto& e : fs::directory_iterator(p))
      if (e.is_regular_file()) parts.push_back(file_signature(e.path()));
    std::sort(parts.begin(), parts.end());
    std::string out = p.string() + "/";
    for (const auto& s : parts) out += s + ";";
    return out;
  }
  const auto size = fs::file_size(p, ec);
  const auto time = fs::last_write_time(p, ec).time_since_epoch().count();
  return p.string() + ":" + std::to_string(size) + ":" + std::to_string(time);
}

std::string fingerprint(const PipelineConfig& c, const std::string& stage) {
  std::string material = stage_params(c, stage).dump();
  const StageIo io = stage_io(c, stage);
  for (const auto& p : io.inputs) material += "|" + file_signature(p);
  for (const auto& [p, producer] : io.produced_inputs) material += "|" + file_signature(p);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(material)));
  return buf;
}

fs::path marker_of(const PipelineConfig& c, const std::string& stage) {
  return c.paths.output / stage / ".done";
}

}  // namespace

PipelineConfig load_config(const fs::path& path) {
  json j;
  try {
    j = load_json(path);
  } catch (const FormatError& e) {
    throw ValidationError(e.what());
  }
  const fs::path base = fs::absolute(path).parent_path();
  PipelineConfig c;
  try {
    const json& p = j.at("paths");
    c.paths.lidar = resolve(base, p.at("lidar").get<std::string>());
    c.paths.dense = resolve(base, p.at("dense").get<std::string>());
    c.paths.raw_trajectory = resolve(base, p.at("raw_trajectory").get<std::string>());
    c.paths.intrinsics = resolve(base, p.at("intrinsics").get<std::string>());
    c.paths.output = resolve(base, p.at("output").get<std::string>());
    const auto opt = [&](const char* key) -> std::optional<fs::path> {
      if (!p.contains(key) || p.at(key).is_null()) return std::nullopt;
      return resolve(base, p.at(key).get<std::string>());
    };
    c.paths.mesh = opt("mesh");
    c.paths.pairs = opt("pairs");
    c.paths.predictions = opt("predictions");
    c.paths.pred_trajectory = opt("pred_trajectory");

    if (j.contains("stages")) c.stages = j.at("stages").get<std::vector<std::string>>();

    const json s = j.value("sample", json::object());
    c.sample.k = get_or(s, "k", c.sample.k);
    c.sample.orientation_weight = get_or(s, "orientation_weight", c.sample.orientation_weight);
    c.sample.seed = get_or(s, "seed", c.sample.seed);

    const json r = j.value("register", json::object());
    IcpParams& icp = c.registration.icp;
    const std::string variant = get_or<std::string>(r, "variant", variant_name(icp.variant));
    if (variant == "point-to-point") icp.variant = IcpVariant::PointToPoint;
    else if (variant == "point-to-plane") icp.variant = IcpVariant::PointToPlane;
    else throw ValidationError("register.variant must be point-to-point or point-to-plane");
    icp.max_iterations = get_or(r, "max_iterations", icp.max_iterations);
    icp.convergence_eps = get_or(r, "convergence_eps", icp.convergence_eps);
    icp.rejection_multiplier = get_or(r, "rejection_multiplier", icp.rejection_multiplier);
    if (r.contains("estimate_scale") && r.at("estimate_scale").is_boolean())
      c.registration.estimate_scale = r.at("estimate_scale").get<bool>();
    c.registration.normal_neighbors = get_or(r, "normal_neighbors", c.registration.normal_neighbors);

    const json f = j.value("filter", json::object());
    c.filter.window = get_or(f, "window", c.filter.window);
    c.filter.polyorder = get_or(f, "polyorder", c.filter.polyorder);
    c.filter.orientation_weight = get_or(f, "orientation_weight", c.filter.orientation_weight);
    c.filter.threshold = auto_or_number(f, "threshold");

    const json rd = j.value("render", json::object());
    c.render.gt.tolerance = get_or(rd, "tolerance", c.render.gt.tolerance);
    c.render.gt.absolute_slack = get_or(rd, "absolute_slack", c.render.gt.absolute_slack);
    c.render.isolation_radius = get_or(rd, "isolation_radius", c.render.isolation_radius);
    c.render.half_size = auto_or_number(rd, "half_size");

    const json e = j.value("evaluate", json::object());
    const std::string scale = get_or<std::string>(e, "scale", "per-frame");
    if (scale == "per-frame") c.evaluate.scale = ScaleMode::PerFrame;
    else if (scale == "global") c.evaluate.scale = ScaleMode::Global;
    else throw ValidationError("evaluate.scale must be per-frame or global");
    c.evaluate.error = parse_error_function(get_or<std::string>(e, "error", "abslog"));
    c.evaluate.depth_bins = get_or(e, "depth_bins", c.evaluate.depth_bins);
    c.evaluate.ratio_bins = get_or(e, "ratio_bins", c.evaluate.ratio_bins);
    c.evaluate.fpv_bins = get_or(e, "fpv_bins", c.evaluate.fpv_bins);
    const std::string units = get_or<std::string>(e, "fpv_units", "pixels");
    if (units == "pixels") c.evaluate.fpv_units = FpvUnits::Pixels;
    else if (units == "radians") c.evaluate.fpv_units = FpvUnits::Radians;
    else throw ValidationError("evaluate.fpv_units must be pixels or radians");
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return c;
}

void save_config(const fs::path& path, const PipelineConfig& c) {
  const fs::path base = fs::absolute(path).parent_path();
  const auto rel = [&](const fs::path& p) { return relative_string(fs::absolute(p), base); };
  const auto opt = [&](const std::optional<fs::path>& p) { return p ? json(rel(*p)) : json(nullptr); };
  json j;
  j["paths"] = {{"lidar", rel(c.paths.lidar)},
                {"dense", rel(c.paths.dense)},
                {"mesh", opt(c.paths.mesh)},
                {"raw_trajectory", rel(c.paths.raw_trajectory)},
                {"intrinsics", rel(c.paths.intrinsics)},
                {"pairs", opt(c.paths.pairs)},
                {"predictions", opt(c.paths.predictions)},
                {"pred_trajectory", opt(c.paths.pred_trajectory)},
                {"output", rel(c.paths.output)}};
  j["stages"] = c.stages;
  j["sample"] = stage_params(c, "sample");
  j["register"] = stage_params(c, "register");
  j["filter"] = stage_params(c, "filter-traj");
  j["render"] = stage_params(c, "render");
  j["evaluate"] = stage_params(c, "evaluate");
  store_json(path, j);
}

PipelineConfig synthetic_dataset_config(const fs::path& dataset_dir, const fs::path& output) {
  const fs::path d = fs::absolute(dataset_dir);
  PipelineConfig c;
  c.paths.lidar = d / "lidar.ply";
  c.paths.dense = d / "dense.ply";
  c.paths.mesh = d / "mesh.ply";
  c.paths.raw_trajectory = d / "raw_traj.tum";
  c.paths.intrinsics = d / "intrinsics.json";
  c.paths.pairs = d / "pairs.txt";
  c.paths.predictions = d / "pred";
  c.paths.pred_trajectory = d / "pred_traj.tum";
  c.paths.output = fs::absolute(output);
  c.sample.k = 20;
  return c;
}

void validate_config(const PipelineConfig& c) {
  if (c.stages.empty()) throw ValidationError("no stages requested");
  std::size_t last = 0;
  for (std::size_t i = 0; i < c.stages.size(); ++i) {
    const auto it = std::find(kStageOrder.begin(), kStageOrder.end(), c.stages[i]);
    if (it == kStageOrder.end()) throw ValidationError("unknown stage '" + c.stages[i] + "'");
    const std::size_t pos = static_cast<std::size_t>(it - kStageOrder.begin());
    if (i > 0 && pos <= last)
      throw ValidationError("stage '" + c.stages[i] + "' is out of order; expected order: sample, register, "
                            "filter-traj, render, evaluate");
    last = pos;
  }
  if (c.paths.output.empty()) throw ValidationError("paths.output is not set");

  const auto requested = [&](const std::string& s) {
    return std::find(c.stages.begin(), c.stages.end(), s) != c.stages.end();
  };
  for (const std::string& stage : c.stages) {
    if (stage == "register" && !c.paths.pairs)
      throw ValidationError("stage 'register' needs a picked point pairs file (paths.pairs)");
    if (stage == "evaluate" && (!c.paths.predictions || !c.paths.pred_trajectory))
      throw ValidationError("stage 'evaluate' needs paths.predictions and paths.pred_trajectory");
    const StageIo io = stage_io(c, stage);
    for (const auto& p : io.inputs)
      if (!fs::exists(p)) throw ValidationError("stage '" + stage + "' input missing: " + p.string());
    for (const auto& [p, producer] : io.produced_inputs) {
      const bool earlier = requested(producer) &&
                           std::find(c.stages.begin(), c.stages.end(), producer) <
                               std::find(c.stages.begin(), c.stages.end(), stage);
      if (!earlier && !fs::exists(p))
        throw ValidationError("stage '" + stage + "' needs " + p.string() + ", produced by stage '" +
                              producer + "'");
    }
  }
  try {
    c.registration.icp.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("register: ") + e.what());
  }
}

RunReport run_pipeline(const PipelineConfig& c, const RunOptions& options) {
  validate_config(c);
  std::ostream& log = options.log ? *options.log : std::cerr;
  const StageArtifacts a(c.paths.output);
  fs::create_directories(c.paths.output);

  RunReport report;
  json stages_json = json::array();
  bool upstream_ran = false;
  for (const std::string& stage : c.stages) {
    const fs::path marker = marker_of(c, stage);
    const std::string fp = fingerprint(c, stage);
    StageOutcome outcome{stage, false, 0};
    std::string recorded;
    if (std::ifstream in(marker); in) std::getline(in, recorded);

    if (!options.force && !upstream_ran && recorded == fp) {
      outcome.skipped = true;
      log << "[" << stage << "] up to date, skipped\n";
    } else {
      log << "[" << stage << "] running\n";
      fs::remove(marker);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        if (stage == "sample") {
          sample_stage(c.paths.raw_trajectory, c.sample, a.subset());
        } else if (stage == "register") {
          RegisterPaths rp;
          rp.src = c.paths.dense;
          rp.dst = c.paths.lidar;
          rp.pairs = c.paths.pairs;
          rp.transform = a.transform();
          rp.overlay = a.overlay();
          rp.registered = a.registered();
          if (c.paths.mesh) {
            rp.mesh_in = c.paths.mesh;
            rp.mesh_out = a.mesh();
          }
          const IcpResult r = register_stage(rp, c.registration);
          log << "[register] final rmse " << r.rmse_history.back() << " after " << r.iterations_used
              << " iterations, inlier fraction " << r.inlier_fraction << "\n";
        } else if (stage == "filter-traj") {
          const FilterReport r =
              filter_stage(c.paths.raw_trajectory, a.smooth(), a.filter_report(), c.filter, a.transform());
          log << "[filter-traj] " << r.outlier_ids.size() << " outlier frames\n";
        } else if (stage == "render") {
          RenderPaths rp;
          rp.cloud = a.registered();
          if (c.paths.mesh) rp.mesh = a.mesh();
          rp.trajectory = a.smooth();
          rp.intrinsics = c.paths.intrinsics;
          rp.filter_report = a.filter_report();
          rp.out_dir = a.depth_dir();
          fs::remove_all(a.depth_dir());
          render_stage(rp, c.render);
        } else {
          EvaluatePaths ep;
          ep.gt_dir = a.depth_dir();
          ep.pred_dir = *c.paths.predictions;
          ep.trajectory = a.smooth();
          ep.pred_trajectory = *c.paths.pred_trajectory;
          ep.intrinsics = c.paths.intrinsics;
          ep.report = a.eval_report();
          ep.plots_dir = a.plots_dir();
          evaluate_stage(ep, c.evaluate);
        }
      } catch (const std::exception& e) {
        throw StageError(stage, e.what());
      }
      outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      // Inputs produced upstream may have changed; fingerprint after the run.
      std::ofstream(marker) << fingerprint(c, stage) << '\n';
      upstream_ran = true;
    }

    if (stage == "register" && options.require_review && !fs::exists(a.approval()))
      throw StageError("register", "awaiting review of " + a.overlay().string() + "; create " +
                                       a.approval().string() + " to approve");

    stages_json.push_back({{"name", stage},
                           {"status", outcome.skipped ? "skipped" : "completed"},
                           {"seconds", outcome.seconds},
                           {"params", stage_params(c, stage)}});
    report.stages.push_back(outcome);
  }

  json run = {{"stages", stages_json}};
  if (fs::is_regular_file(a.eval_report())) {
    const json e = load_json(a.eval_report());
    run["evaluation"] = e.at("metrics");
    MetricRecord m;
    const json& mj = e.at("metrics");
    m.mae = mj.at("mae");
    m.mre = mj.at("mre");
    m.mle = mj.at("mle");
    m.sae = mj.at("sae");
    m.sle = mj.at("sle");
    m.p125 = mj.at("p_1.25");
    m.p125_2 = mj.at("p_1.25^2");
    m.p125_3 = mj.at("p_1.25^3");
    m.sample_count = mj.at("sample_count");
    report.evaluation = m;
  }
  store_json(a.run_report(), run);
  return report;
}

}  // namespace rdc
