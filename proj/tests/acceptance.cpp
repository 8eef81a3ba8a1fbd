// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "rdc/eval.hpp"
#include "rdc/io.hpp"
#include "rdc/pipeline.hpp"
#include "rdc/registration.hpp"
#include "rdc/render.hpp"
#include "rdc/synth.hpp"
#include "rdc/trajfilter.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

using namespace rdc;

namespace {

constexpr double kPi = std::numbers::pi;

// Collects failed sub-checks for one criterion.
class Criterion {
 public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)) {}

  void check(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }

  bool report() const {
    const bool ok = failures_.empty();
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id_ << ": " << title_;
    for (const auto& n : notes_) std::cout << " [" << n << "]";
    std::cout << '\n';
    for (const auto& f : failures_) std::cout << "    failed: " << f << '\n';
    return ok;
  }

 private:
  int id_;
  std::string title_;
  std::vector<std::string> failures_, notes_;
};

std::string num(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Eigen::Quaterniond random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng)).normalized();
}

double relative_error(double a, double b) {
  if (a == b) return 0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

// ---------------------------------------------------------------------------

bool end_to_end_oracle() {
  Criterion c(1, "rendered ground truth agrees with analytic depth on the two-plane scene");
  const auto start = std::chrono::steady_clock::now();

  const synth::SceneSpec scene = synth::two_plane_scene();
  const CameraIntrinsics k(250, 250, 159.5, 119.5, 320, 240);
  synth::TrajectoryParams tp;
  tp.center = Eigen::Vector3d(0.5, 0.5, 0);
  const Trajectory orbit = synth::make_trajectory(synth::TrajectoryKind::Orbit, tp, 60, 1);
  const PointCloud cloud = synth::sample_cloud(scene, 50000, 0.0, 2);
  const TriangleMesh mesh = synth::scene_mesh(scene, 0.2);
  const auto splats = create_splats(cloud, &mesh, 0.2);

  std::size_t joint = 0, close = 0, see_through = 0;
  for (const Pose& pose : orbit) {
    const DepthMap occ = render_occlusion(&mesh, splats, pose, k);
    const DepthMap gt = render_gt_depth(cloud, occ, pose, k);
    const DepthMap truth = synth::analytic_depth(scene, pose, k);
    for (int v = 0; v < k.height; ++v)
      for (int u = 0; u < k.width; ++u) {
        if (!gt.valid(u, v) || !truth.valid(u, v)) continue;
        ++joint;
        if (std::abs(gt(u, v) - truth(u, v)) <= 0.01 * truth(u, v)) ++close;
        // A front-plane pixel (z = 2 in the world) holding a back-plane point (z = 0).
        const Eigen::Vector3d seen = pose.apply(unproject(k, u, v, truth(u, v)));
        const Eigen::Vector3d kept = pose.apply(unproject(k, u, v, gt(u, v)));
        if (seen.z() > 1.0 && kept.z() < 1.0) ++see_through;
      }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double fraction = joint ? double(close) / double(joint) : 0.0;
  c.note("agreement " + num(100 * fraction) + "% of " + std::to_string(joint) + " pixels");
  c.note("see-through " + std::to_string(see_through));
  c.note(num(seconds) + " s");
  c.check(joint > 0, "no jointly valid pixels");
  c.check(fraction >= 0.99, "agreement below 99%");
  c.check(see_through == 0, "see-through pixels present");
  c.check(seconds < 60, "runtime above 60 s");
  return c.report();
}

// ---------------------------------------------------------------------------

bool registration_recovery() {
  Criterion c(2, "Umeyama and ICP recover known similarity transforms");
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> scale(0.1, 10), offset(-10, 10), unit(-2, 2);

  double worst_umeyama = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Similarity truth(scale(rng), random_rotation(rng), Eigen::Vector3d(offset(rng), offset(rng), offset(rng)));
    Eigen::Matrix3Xd src(3, 50);
    for (int i = 0; i < 50; ++i) src.col(i) << unit(rng), unit(rng), unit(rng);
    const Similarity est = umeyama_align(src, truth.apply(src));
    worst_umeyama = std::max({worst_umeyama, std::abs(est.scale() / truth.scale() - 1),
                              angular_distance(est.rotation(), truth.rotation()),
                              (est.translation() - truth.translation()).norm()});
  }
  c.note("Umeyama worst " + num(worst_umeyama));
  c.check(worst_umeyama <= 1e-9, "Umeyama error above 1e-9");

  // ICP from a perturbed init: the source is the target seen through a known
  // similarity, initialized 15 degrees / 0.5 m / 10% scale away from it.
  const synth::SceneSpec scene = synth::benchmark_scene();
  const PointCloud dst = synth::sample_cloud(scene, 20000, 0.0, 11);
  const Similarity truth(0.8, Eigen::Quaterniond(Eigen::AngleAxisd(0.6, Eigen::Vector3d(1, -2, 1).normalized())),
                         Eigen::Vector3d(0.3, -0.7, 1.2));
  const PointCloud src = apply_similarity(truth.inverse(), dst);
  const Eigen::Vector3d axis = Eigen::Vector3d(0.2, 1, 0.4).normalized();
  const Eigen::Vector3d shift = Eigen::Vector3d(1, 1, -1).normalized() * 0.5;
  const Similarity perturbation(1.1, Eigen::Quaterniond(Eigen::AngleAxisd(15 * kPi / 180, axis)), shift);
  const Similarity init = compose(perturbation, truth);

  IcpParams params;
  params.variant = IcpVariant::PointToPoint;
  params.estimate_scale = true;
  params.max_iterations = 500;
  params.convergence_eps = 1e-14;
  const IcpResult r = icp(src, dst, init, params);
  const double rot = angular_distance(r.transform.rotation(), truth.rotation());
  const double trans = (r.transform.translation() - truth.translation()).norm();
  c.note("ICP rotation " + num(rot) + " rad, translation " + num(trans) + " m, " +
         std::to_string(r.iterations_used) + " iterations");
  c.check(rot <= 1e-4, "ICP rotation error above 1e-4 rad");
  c.check(trans <= 1e-4, "ICP translation error above 1e-4 m");

  // Monotone RMSE over a seed sweep with varied clouds, motions and variants.
  std::size_t increases = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 r2(seed);
    std::normal_distribution<double> g;
    const PointCloud target = synth::sample_cloud(scene, 1500, 0.005, 1000 + seed);
    const PointCloud source_base = synth::sample_cloud(scene, 1200, 0.005, 5000 + seed);
    const Similarity motion(1.0 + 0.05 * g(r2), from_rotation_vector<double>(Eigen::Vector3d(g(r2), g(r2), g(r2)) * 0.1),
                            Eigen::Vector3d(g(r2), g(r2), g(r2)) * 0.2);
    IcpParams p;
    p.variant = seed % 2 ? IcpVariant::PointToPlane : IcpVariant::PointToPoint;
    p.estimate_scale = seed % 3 == 0;
    const IcpResult run = icp(apply_similarity(motion, source_base), target, Similarity::Identity(), p);
    for (std::size_t i = 1; i < run.rmse_history.size(); ++i)
      if (run.rmse_history[i] > run.rmse_history[i - 1]) ++increases;
  }
  c.note("RMSE increases in sweep " + std::to_string(increases));
  c.check(increases == 0, "RMSE history increased");
  return c.report();
}

// ---------------------------------------------------------------------------

std::vector<EvaluationSample> random_samples(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> depth(0.1, 80), spread(0.01, 1.0);
  std::normal_distribution<double> g;
  const double sigma = spread(rng);
  std::vector<EvaluationSample> v(n);
  for (auto& s : v) {
    s.gt = depth(rng);
    s.est = s.gt * std::exp(sigma * g(rng));
  }
  return v;
}

bool metric_correctness() {
  Criterion c(3, "scalar metrics match a brute-force loop and satisfy invariants");
  std::mt19937_64 rng(3);
  const auto v = random_samples(1000000, rng);

  double mae = 0, mre = 0, mle = 0, sae = 0, sle = 0, p1 = 0, p2 = 0, p3 = 0;
  for (const auto& s : v) {
    const double d = s.est - s.gt, l = std::log(s.est) - std::log(s.gt);
    mae += std::abs(d);
    mre += std::abs(d) / s.gt;
    mle += std::abs(l);
    sae += d * d;
    sle += l * l;
    p1 += std::abs(l) <= std::log(1.25);
    p2 += std::abs(l) <= std::log(1.25 * 1.25);
    p3 += std::abs(l) <= std::log(1.25 * 1.25 * 1.25);
  }
  const double n = double(v.size());
  const MetricRecord m = scalar_metrics(v);
  const double expected[8] = {mae / n, mre / n, mle / n, std::sqrt(sae / n), std::sqrt(sle / n), p1 / n, p2 / n, p3 / n};
  const double got[8] = {m.mae, m.mre, m.mle, m.sae, m.sle, m.p125, m.p125_2, m.p125_3};
  double worst = 0;
  for (int i = 0; i < 8; ++i) worst = std::max(worst, relative_error(got[i], expected[i]));
  c.note("worst relative difference " + num(worst));
  c.check(worst <= 1e-12, "brute-force mismatch above 1e-12");

  std::size_t broken = 0;
  for (int set = 0; set < 100; ++set) {
    auto a = random_samples(2000, rng);
    const MetricRecord ma = scalar_metrics(a);
    std::uniform_real_distribution<double> factor(0.01, 100);
    const double k = factor(rng);
    for (auto& s : a) {
      s.gt *= k;
      s.est *= k;
    }
    const MetricRecord mb = scalar_metrics(a);
    const bool invariant = relative_error(mb.mae, k * ma.mae) <= 1e-12 && relative_error(mb.sae, k * ma.sae) <= 1e-12 &&
                           relative_error(mb.mre, ma.mre) <= 1e-12 && relative_error(mb.mle, ma.mle) <= 1e-12 &&
                           relative_error(mb.sle, ma.sle) <= 1e-12 && mb.p125 == ma.p125 &&
                           mb.p125_2 == ma.p125_2 && mb.p125_3 == ma.p125_3;
    const bool monotone = ma.p125 <= ma.p125_2 && ma.p125_2 <= ma.p125_3 && ma.p125_3 <= 1.0;
    broken += !(invariant && monotone);
  }
  c.note(std::to_string(100 - broken) + "/100 invariant sets");
  c.check(broken == 0, "scale invariance or monotonicity violated");
  return c.report();
}

// ---------------------------------------------------------------------------

bool histogram_consistency() {
  Criterion c(4, "histograms agree with scalar metrics and localize FPV error");
  std::mt19937_64 rng(4);
  const auto v = random_samples(100000, rng);

  const RatioHistogram h = log_ratio_histogram(v, default_ratio_bins(v, 101));
  double total = 0;
  for (double f : h.fraction) total += f;
  c.note("H_ratio sum - 1 = " + num(total - 1));
  c.check(std::abs(total - 1) <= 1e-12, "ratio histogram does not sum to 1");

  double lo = v[0].gt, hi = v[0].gt;
  for (const auto& s : v) {
    lo = std::min(lo, s.gt);
    hi = std::max(hi, s.gt);
  }
  const std::vector<double> one_bin = {lo, hi};
  const BinnedError hd = depth_wise_histogram(v, one_bin, ErrorFunction::AbsLog);
  c.check(hd.values[0].has_value() && *hd.values[0] == scalar_metrics(v).mle, "single-bin depth histogram differs from MLE");
  const BinnedError hd_abs = depth_wise_histogram(v, one_bin, ErrorFunction::Absolute);
  c.check(hd_abs.values[0].has_value() && *hd_abs.values[0] == scalar_metrics(v).mae, "single-bin depth histogram differs from MAE");

  // One forward-moving frame; error injected only within 10 px of the FPV.
  const CameraIntrinsics k(200, 200, 99.5, 79.5, 200, 160);
  const Trajectory traj = {Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero(), 0.0, 0),
                           Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0, 0, 0.5), 0.1, 1)};
  FrameDepth gt{0, DepthMap(k.width, k.height)}, est{0, DepthMap(k.width, k.height)};
  gt.depth.values().setConstant(10.0);
  for (int y = 0; y < k.height; ++y)
    for (int x = 0; x < k.width; ++x)
      est.depth(x, y) = std::hypot(x - k.cx, y - k.cy) < 10 ? 12.0 : 10.0;
  const auto samples = pool_samples(std::span<const FrameDepth>(&gt, 1), std::span<const FrameDepth>(&est, 1), traj, k);
  std::vector<double> edges;
  for (int i = 0; i <= 14; ++i) edges.push_back(10.0 * i);
  const BinnedError e = fpv_metric(samples, edges, FpvUnits::Pixels);
  bool localized = e.values[0].has_value() && std::abs(*e.values[0] - std::log(1.2)) < 1e-12;
  for (std::size_t b = 1; b < e.values.size(); ++b) localized = localized && (!e.values[b] || *e.values[b] == 0.0);
  c.check(localized, "FPV error not confined to the first bin");
  return c.report();
}

// ---------------------------------------------------------------------------

bool savgol_exactness() {
  Criterion c(5, "Savitzky-Golay reproduces polynomials and isolates a teleport");
  double worst = 0;
  for (auto [w, p] : {std::pair{5, 2}, {9, 3}, {11, 4}}) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(w));
    std::uniform_real_distribution<double> u(-1, 1);
    for (int degree = 0; degree <= p; ++degree) {
      Eigen::MatrixXd coeffs(degree + 1, 3);
      for (int d = 0; d <= degree; ++d)
        for (int col = 0; col < 3; ++col) coeffs(d, col) = u(rng) * std::pow(0.05, d);
      Trajectory t;
      for (int i = 0; i < 100; ++i) {
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        for (int d = 0; d <= degree; ++d) x += coeffs.row(d).transpose() * std::pow(double(i), d);
        t.emplace_back(Eigen::Quaterniond(Eigen::AngleAxisd(0.01 * i, Eigen::Vector3d::UnitZ())), x, i / 30.0, i);
      }
      FilterParams params;
      params.window = w;
      params.polyorder = p;
      params.threshold = std::numeric_limits<double>::infinity();
      const FilterReport r = filter_trajectory(t, params);
      for (int i = w / 2; i < 100 - w / 2; ++i)
        worst = std::max(worst, (r.smoothed[static_cast<std::size_t>(i)].translation() -
                                 t[static_cast<std::size_t>(i)].translation()).norm());
    }
  }
  c.note("worst interior deviation " + num(worst) + " m");
  c.check(worst <= 1e-9, "polynomial not reproduced within 1e-9");

  Trajectory t;
  for (int i = 0; i < 300; ++i) {
    const double s = i / 30.0;
    t.emplace_back(Eigen::Quaterniond(Eigen::AngleAxisd(0.1 * s, Eigen::Vector3d::UnitZ())),
                   Eigen::Vector3d(4 * std::cos(0.15 * s), 4 * std::sin(0.15 * s), 1.5 + 0.05 * s), s, i);
  }
  t[150] = Pose(t[150].rotation(), t[150].translation() + Eigen::Vector3d(0, 10, 0), t[150].timestamp(), 150);
  FilterParams params;
  params.threshold = 1.0;
  const FilterReport r = filter_trajectory(t, params);
  std::string ids;
  for (FrameId id : r.outlier_ids) ids += (ids.empty() ? "" : ",") + std::to_string(id);
  c.note("detections {" + ids + "}");
  c.check(r.outlier_ids == std::vector<FrameId>{150}, "teleport is not the only detection");
  return c.report();
}

// ---------------------------------------------------------------------------

bool scale_recovery() {
  Criterion c(6, "odometry scale recovery");
  std::mt19937_64 rng(6);
  Trajectory gt;
  for (int i = 0; i < 200; ++i) {
    const double s = i / 20.0;
    gt.emplace_back(Eigen::Quaterniond::Identity(),
                    Eigen::Vector3d(5 * std::cos(0.3 * s), 5 * std::sin(0.3 * s), 0.2 * s), std::nullopt, i);
  }
  double worst_exact = 0, worst_noisy = 0;
  for (double s : {0.1, 0.5, 2.0, 10.0}) {
    Trajectory est, noisy;
    std::normal_distribution<double> g(0, 0.01);
    Eigen::Vector3d position = s * gt.front().translation();
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const Pose& p = gt[i];
      est.emplace_back(p.rotation(), s * p.translation(), std::nullopt, p.frame_id());
      // 1% noise on every component of each relative translation.
      if (i > 0) {
        const Eigen::Vector3d step = s * (p.translation() - gt[i - 1].translation());
        position += Eigen::Vector3d(step.x() * (1 + g(rng)), step.y() * (1 + g(rng)), step.z() * (1 + g(rng)));
      }
      noisy.emplace_back(p.rotation(), position, std::nullopt, p.frame_id());
    }
    const ScaleRecovery exact = recover_scale(est, gt, ScaleMode::PerFrame);
    for (const auto& [id, f] : exact.scale) worst_exact = std::max(worst_exact, std::abs(f - 1 / s));
    if (exact.scale.size() != gt.size()) worst_exact = std::numeric_limits<double>::infinity();
    const ScaleRecovery global = recover_scale(noisy, gt, ScaleMode::Global);
    worst_noisy = std::max(worst_noisy, std::abs(global.global * s - 1));
  }
  c.note("exact worst " + num(worst_exact));
  c.note("noisy worst relative " + num(worst_noisy));
  c.check(worst_exact <= 1e-9, "per-frame scale off by more than 1e-9");
  c.check(worst_noisy <= 0.01, "global scale off by more than 1%");
  return c.report();
}

// ---------------------------------------------------------------------------

bool format_round_trips(const fs::path& scratch) {
  Criterion c(7, "format round trips");
  const fs::path dir = scratch / "formats";
  fs::create_directories(dir);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;

  PointCloud cloud(Eigen::Matrix3Xd(3, 5000));
  cloud.normals.resize(3, 5000);
  for (int i = 0; i < 5000; ++i) {
    cloud.points.col(i) << g(rng) * 50, g(rng) * 50, g(rng) * 50;
    cloud.normals.col(i) = Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized();
  }
  cloud.normals = read_point_cloud([&] {
    write_ply(dir / "n.ply", cloud);
    return dir / "n.ply";
  }()).normals;  // fixed point of load-time normalization
  write_ply(dir / "a.ply", cloud);
  const PointCloud back = read_point_cloud(dir / "a.ply");
  write_ply(dir / "b.ply", back);
  c.check(back.points == cloud.points && back.normals == cloud.normals, "PLY payload differs");
  c.check(slurp(dir / "a.ply") == slurp(dir / "b.ply"), "PLY bytes differ");

  Trajectory traj;
  for (int i = 0; i < 500; ++i)
    traj.emplace_back(Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng)).normalized(),
                      Eigen::Vector3d(g(rng), g(rng), g(rng)) * 100, 1.6e9 + i * 0.033, i);
  write_tum(dir / "t.tum", traj);
  const Trajectory tum = read_tum(dir / "t.tum");
  double tum_err = 0;
  for (std::size_t i = 0; i < traj.size(); ++i)
    tum_err = std::max({tum_err, (tum[i].translation() - traj[i].translation()).norm(),
                        angular_distance(tum[i].rotation(), traj[i].rotation())});
  c.note("TUM " + num(tum_err));
  c.check(tum.size() == traj.size() && tum_err <= 1e-9, "TUM deviation above 1e-9");

  DepthMap depth(320, 240);
  std::uniform_real_distribution<double> u(0.05, 250);
  std::bernoulli_distribution hole(0.05);
  for (int y = 0; y < 240; ++y)
    for (int x = 0; x < 320; ++x) depth(x, y) = hole(rng) ? 0.0 : u(rng);
  write_depth_png16(dir / "d.png", depth);
  const DepthMap png = read_depth_png16(dir / "d.png");
  double png_err = 0;
  bool masks_equal = true;
  for (int y = 0; y < 240; ++y)
    for (int x = 0; x < 320; ++x) {
      masks_equal = masks_equal && png.valid(x, y) == depth.valid(x, y);
      if (depth.valid(x, y)) png_err = std::max(png_err, std::abs(png(x, y) - depth(x, y)));
    }
  c.note("PNG16 " + num(png_err) + " m");
  c.check(masks_equal && png_err <= 1.0 / 256.0, "PNG16 deviation above 1/256 m");

  write_tum(dir / "k.tum", traj);
  write_intrinsics(dir / "cam.json", CameraIntrinsics(200, 200, 99.5, 79.5, 200, 160));
  fs::create_directories(dir / "depth");
  DatasetManifest m;
  m.intrinsics = dir / "cam.json";
  m.trajectory = dir / "k.tum";
  m.depth_dir = dir / "depth";
  for (const Pose& p : traj) m.frames.push_back({p.frame_id(), true, false});
  export_kitti_odometry(m, dir / "kitti");
  const Trajectory kitti = read_kitti_poses(dir / "kitti" / "poses.txt");
  double kitti_err = 0;
  for (std::size_t i = 0; i < traj.size() && i < kitti.size(); ++i)
    kitti_err = std::max({kitti_err, (kitti[i].translation() - traj[i].translation()).norm(),
                          angular_distance(kitti[i].rotation(), traj[i].rotation())});
  c.note("KITTI " + num(kitti_err));
  c.check(kitti.size() == traj.size() && kitti_err <= 1e-6, "KITTI deviation above 1e-6");
  return c.report();
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(RDC_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool determinism(const fs::path& scratch) {
  Criterion c(8, "two clean pipeline runs give identical outputs");
  std::vector<fs::path> roots;
  for (int run = 0; run < 2; ++run) {
    const fs::path root = scratch / ("run" + std::to_string(run));
    fs::remove_all(root);
    fs::create_directories(root);
    const int synth = run_cli("synth --scene benchmark --out " + (root / "data").string(), root / "synth.log");
    const int pipe = run_cli("run --config " + (root / "data" / "pipeline.json").string(), root / "run.log");
    c.check(synth == 0, "synth exited with " + std::to_string(synth));
    c.check(pipe == 0, "run exited with " + std::to_string(pipe));
    roots.push_back(root / "data" / "run");
  }
  const StageArtifacts a(roots[0]), b(roots[1]);
  std::size_t maps = 0, differing = 0;
  if (fs::is_directory(a.depth_dir()))
    for (const auto& entry : fs::directory_iterator(a.depth_dir())) {
      if (entry.path().extension() != ".png") continue;
      ++maps;
      const fs::path other = b.depth_dir() / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
    }
  c.note(std::to_string(maps) + " depth maps compared");
  c.check(maps > 0, "no depth maps produced");
  c.check(differing == 0, std::to_string(differing) + " depth maps differ");
  const std::string ra = slurp(a.eval_report()), rb = slurp(b.eval_report());
  c.check(!ra.empty() && ra == rb, "evaluation reports differ");
  return c.report();
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "rdc_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  int failed = 0;
  const auto guard = [&](bool (*fn)()) {
    try {
      failed += !fn();
    } catch (const std::exception& e) {
      std::cout << "FAIL (exception: " << e.what() << ")\n";
      ++failed;
    }
  };
  const auto guard_dir = [&](bool (*fn)(const fs::path&)) {
    try {
      failed += !fn(scratch);
    } catch (const std::exception& e) {
      std::cout << "FAIL (exception: " << e.what() << ")\n";
      ++failed;
    }
  };
  guard(end_to_end_oracle);
  guard(registration_recovery);
  guard(metric_correctness);
  guard(histogram_consistency);
  guard(savgol_exactness);
  guard(scale_recovery);
  guard_dir(format_round_trips);
  guard_dir(determinism);

  fs::remove_all(scratch);
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << '\n';
  return failed ? 1 : 0;
}
