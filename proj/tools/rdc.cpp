#include "rdc/io.hpp"
#include "rdc/pipeline.hpp"
#include "rdc/synth.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <numbers>

namespace {

using namespace rdc;

std::optional<double> parse_auto(const std::string& s, const char* what) {
  if (s == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument(std::string(what) + " must be a number or 'auto', got '" + s + "'");
}

IcpVariant parse_variant(const std::string& s) {
  if (s == "point-to-point") return IcpVariant::PointToPoint;
  if (s == "point-to-plane") return IcpVariant::PointToPlane;
  throw std::invalid_argument("unknown ICP variant '" + s + "'");
}

std::optional<fs::path> opt_path(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<fs::path>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rdc: dense ground-truth depth for rigid-scene video and depth evaluation"};
  app.require_subcommand(1);
  std::function<int()> action;

  // sample
  {
    auto* cmd = app.add_subcommand("sample", "Select a frame subset by k-means over 6D poses");
    auto traj = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto params = std::make_shared<SamplingParams>();
    cmd->add_option("--traj", *traj, "Input TUM trajectory")->required();
    cmd->add_option("--k", params->k, "Number of clusters")->required();
    cmd->add_option("--orientation-weight", params->orientation_weight, "Meters per radian");
    cmd->add_option("--seed", params->seed, "k-means++ seed");
    cmd->add_option("--out", *out, "Output id list")->required();
    cmd->callback([=, &action] {
      action = [=] {
        const auto ids = sample_stage(*traj, *params, *out);
        std::cout << ids.size() << " frames selected\n";
        return 0;
      };
    });
  }

  // filter-traj
  {
    auto* cmd = app.add_subcommand("filter-traj", "Smooth a trajectory and replace outlier poses");
    struct Opts {
      std::string in, out, report, threshold = "auto", transform;
      FilterParams params;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--in", o->in, "Raw TUM trajectory")->required();
    cmd->add_option("--out", o->out, "Smoothed TUM trajectory")->required();
    cmd->add_option("--report", o->report, "JSON report")->required();
    cmd->add_option("--window", o->params.window, "Odd window length");
    cmd->add_option("--polyorder", o->params.polyorder, "Polynomial order");
    cmd->add_option("--orientation-weight", o->params.orientation_weight, "Meters per radian");
    cmd->add_option("--threshold", o->threshold, "Outlier threshold or 'auto'");
    cmd->add_option("--transform", o->transform, "transform.json applied before filtering");
    cmd->callback([=, &action] {
      action = [=] {
        FilterParams p = o->params;
        p.threshold = parse_auto(o->threshold, "--threshold");
        const auto r = filter_stage(o->in, o->out, o->report, p, opt_path(o->transform));
        std::cout << r.outlier_ids.size() << " outlier frames, threshold " << r.threshold << "\n";
        return 0;
      };
    });
  }

  // register
  {
    auto* cmd = app.add_subcommand("register", "Align the reconstruction cloud to the reference cloud");
    struct Opts {
      std::string src, dst, pairs, variant = "point-to-plane", out, overlay, registered, mesh, mesh_out,
          scale = "auto";
      RegisterParams params;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--src", o->src, "Reconstruction cloud (PLY)")->required();
    cmd->add_option("--dst", o->dst, "Reference cloud (PLY)")->required();
    cmd->add_option("--pairs", o->pairs, "Picked point pairs 'sx sy sz dx dy dz'");
    cmd->add_option("--variant", o->variant, "point-to-point or point-to-plane");
    cmd->add_option("--max-iterations", o->params.icp.max_iterations, "ICP iteration cap");
    cmd->add_option("--eps", o->params.icp.convergence_eps, "RMSE change for convergence, meters");
    cmd->add_option("--rejection", o->params.icp.rejection_multiplier, "Median distance multiplier");
    cmd->add_option("--scale", o->scale, "Refine scale in ICP: auto, on, off");
    cmd->add_option("--out", o->out, "transform.json")->required();
    cmd->add_option("--overlay", o->overlay, "Overlay PLY for review");
    cmd->add_option("--registered", o->registered, "Reference cloud with transferred attributes");
    cmd->add_option("--mesh", o->mesh, "Mesh in the reconstruction frame");
    cmd->add_option("--mesh-out", o->mesh_out, "Mesh mapped into the reference frame");
    cmd->callback([=, &action] {
      action = [=] {
        RegisterParams p = o->params;
        p.icp.variant = parse_variant(o->variant);
        if (o->scale == "on") p.estimate_scale = true;
        else if (o->scale == "off") p.estimate_scale = false;
        else if (o->scale != "auto") throw std::invalid_argument("--scale must be auto, on or off");
        RegisterPaths paths;
        paths.src = o->src;
        paths.dst = o->dst;
        paths.pairs = opt_path(o->pairs);
        paths.transform = o->out;
        paths.overlay = opt_path(o->overlay);
        paths.registered = opt_path(o->registered);
        paths.mesh_in = opt_path(o->mesh);
        paths.mesh_out = opt_path(o->mesh_out);
        const IcpResult r = register_stage(paths, p);
        std::cout << "rmse " << r.rmse_history.front() << " -> " << r.rmse_history.back() << " in "
                  << r.iterations_used << " iterations, inlier fraction " << r.inlier_fraction << "\n";
        return 0;
      };
    });
  }

  // render
  {
    auto* cmd = app.add_subcommand("render", "Render ground-truth depth maps");
    struct Opts {
      std::string cloud, mesh, traj, intrinsics, out, report, half_size = "auto";
      RenderParams params;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--cloud", o->cloud, "Registered cloud with normals (PLY)")->required();
    cmd->add_option("--mesh", o->mesh, "Occlusion mesh (PLY)");
    cmd->add_option("--traj", o->traj, "TUM trajectory in the cloud frame")->required();
    cmd->add_option("--intrinsics", o->intrinsics, "Camera intrinsics JSON")->required();
    cmd->add_option("--out", o->out, "Output directory")->required();
    cmd->add_option("--tolerance", o->params.gt.tolerance, "Relative occlusion slack");
    cmd->add_option("--absolute-slack", o->params.gt.absolute_slack, "Absolute occlusion slack, meters");
    cmd->add_option("--isolation-radius", o->params.isolation_radius, "Splat isolation radius, meters");
    cmd->add_option("--half-size", o->half_size, "Splat half size, meters, or 'auto'");
    cmd->add_option("--filter-report", o->report, "filter-traj report; outliers are flagged");
    cmd->callback([=, &action] {
      action = [=] {
        RenderParams p = o->params;
        p.half_size = parse_auto(o->half_size, "--half-size");
        RenderPaths paths;
        paths.cloud = o->cloud;
        paths.mesh = opt_path(o->mesh);
        paths.trajectory = o->traj;
        paths.intrinsics = o->intrinsics;
        paths.filter_report = opt_path(o->report);
        paths.out_dir = o->out;
        std::cout << render_stage(paths, p) << " frames rendered\n";
        return 0;
      };
    });
  }

  // evaluate
  {
    auto* cmd = app.add_subcommand("evaluate", "Evaluate predicted depth against ground truth");
    struct Opts {
      std::string gt, pred, traj, pred_traj, intrinsics, out, plots, scale = "per-frame", error = "abslog",
          fpv_units = "pixels";
      EvaluateParams params;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--gt", o->gt, "Ground-truth depth directory")->required();
    cmd->add_option("--pred", o->pred, "Predicted depth directory")->required();
    cmd->add_option("--traj", o->traj, "Ground-truth TUM trajectory")->required();
    cmd->add_option("--pred-traj", o->pred_traj, "Estimated TUM trajectory")->required();
    cmd->add_option("--intrinsics", o->intrinsics, "Camera intrinsics JSON")->required();
    cmd->add_option("--scale", o->scale, "per-frame or global");
    cmd->add_option("--error", o->error, "Histogram error function: mae, mre, mle, sae, sle");
    cmd->add_option("--depth-bins", o->params.depth_bins, "Depth histogram bins");
    cmd->add_option("--ratio-bins", o->params.ratio_bins, "Log-ratio histogram bins");
    cmd->add_option("--fpv-bins", o->params.fpv_bins, "FPV distance bins");
    cmd->add_option("--fpv-units", o->fpv_units, "pixels or radians");
    cmd->add_option("--out", o->out, "Report JSON")->required();
    cmd->add_option("--plots", o->plots, "Directory for SVG plots");
    cmd->callback([=, &action] {
      action = [=] {
        EvaluateParams p = o->params;
        if (o->scale == "per-frame") p.scale = ScaleMode::PerFrame;
        else if (o->scale == "global") p.scale = ScaleMode::Global;
        else throw std::invalid_argument("--scale must be per-frame or global");
        if (o->fpv_units == "pixels") p.fpv_units = FpvUnits::Pixels;
        else if (o->fpv_units == "radians") p.fpv_units = FpvUnits::Radians;
        else throw std::invalid_argument("--fpv-units must be pixels or radians");
        p.error = parse_error_function(o->error);
        EvaluatePaths paths;
        paths.gt_dir = o->gt;
        paths.pred_dir = o->pred;
        paths.trajectory = o->traj;
        paths.pred_trajectory = o->pred_traj;
        paths.intrinsics = o->intrinsics;
        paths.report = o->out;
        paths.plots_dir = opt_path(o->plots);
        const MetricRecord m = evaluate_stage(paths, p);
        std::cout << "samples " << m.sample_count << "  MAE " << m.mae << " m  MRE " << m.mre << "  MLE "
                  << m.mle << "  SAE " << m.sae << " m  SLE " << m.sle << "  P1.25 " << m.p125 << "\n";
        return 0;
      };
    });
  }

  // synth
  {
    auto* cmd = app.add_subcommand("synth", "Generate a synthetic dataset with a ready pipeline config");
    struct Opts {
      std::string scene, kind = "orbit", out;
      synth::DatasetParams params;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--scene", o->scene, "Scene JSON, or 'benchmark' / 'two-plane'")->default_val("benchmark");
    cmd->add_option("--traj-kind", o->kind, "orbit, dolly or grid");
    cmd->add_option("--frames", o->params.frames, "Number of frames");
    cmd->add_option("--lidar-points", o->params.lidar_points, "Reference cloud size");
    cmd->add_option("--dense-points", o->params.dense_points, "Reconstruction cloud size");
    cmd->add_option("--seed", o->params.seed, "Random seed");
    cmd->add_option("--out", o->out, "Dataset directory")->required();
    cmd->callback([=, &action] {
      action = [=] {
        synth::SceneSpec scene;
        if (o->scene == "benchmark") scene = synth::benchmark_scene();
        else if (o->scene == "two-plane") scene = synth::two_plane_scene();
        else scene = synth::read_scene(o->scene);
        synth::DatasetParams p = o->params;
        p.trajectory_kind = synth::parse_trajectory_kind(o->kind);
        // Outlier frames must exist in the generated sequence.
        std::erase_if(p.outlier_frames, [&](FrameId id) { return id >= p.frames; });
        synth::write_dataset(scene, p, o->out);
        const fs::path out(o->out);
        save_config(out / "pipeline.json", synthetic_dataset_config(out, out / "run"));
        std::cout << "dataset written to " << o->out << "\n";
        return 0;
      };
    });
  }

  // run
  {
    auto* cmd = app.add_subcommand("run", "Run the pipeline described by a config file");
    auto config = std::make_shared<std::string>();
    auto opts = std::make_shared<RunOptions>();
    cmd->add_option("--config", *config, "Pipeline JSON")->required();
    cmd->add_flag("--force", opts->force, "Rerun completed stages");
    cmd->add_flag("--require-review", opts->require_review, "Halt after registration until approved");
    cmd->callback([=, &action] {
      action = [=] {
        try {
          const PipelineConfig c = load_config(*config);
          const RunReport r = run_pipeline(c, *opts);
          for (const auto& s : r.stages)
            std::cout << s.name << ": " << (s.skipped ? "skipped" : "completed") << " (" << s.seconds << " s)\n";
          if (r.evaluation)
            std::cout << "MAE " << r.evaluation->mae << " m, MLE " << r.evaluation->mle << ", P1.25 "
                      << r.evaluation->p125 << "\n";
          return 0;
        } catch (const ValidationError& e) {
          std::cerr << "validation error: " << e.what() << "\n";
          return 2;
        } catch (const StageError& e) {
          std::cerr << "error: " << e.what() << "\n";
          return 3;
        }
      };
    });
  }

  // export-kitti
  {
    auto* cmd = app.add_subcommand("export-kitti", "Export a dataset in KITTI odometry layout");
    auto manifest = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--manifest", *manifest, "Dataset manifest JSON")->required();
    cmd->add_option("--out", *out, "Output sequence directory")->required();
    cmd->callback([=, &action] {
      action = [=] {
        export_kitti_odometry(load_manifest(*manifest), *out);
        return 0;
      };
    });
  }

  // eval-subset
  {
    auto* cmd = app.add_subcommand("eval-subset", "List frames whose motion meets subset criteria");
    struct Opts {
      std::string traj, manifest, out;
      double forward_deg = -1, rotation_deg = -1, min_disp = -1;
      bool forward = false, no_rotation = false;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--traj", o->traj, "TUM trajectory")->required();
    cmd->add_option("--manifest", o->manifest, "Manifest whose flagged frames are excluded");
    cmd->add_flag("--forward", o->forward, "Require forward motion (default 10 degrees)");
    cmd->add_option("--max-forward-angle", o->forward_deg, "Forward-motion cone half angle, degrees");
    cmd->add_flag("--no-rotation", o->no_rotation, "Require no rotation (default 1 degree)");
    cmd->add_option("--max-rotation", o->rotation_deg, "Relative rotation limit, degrees");
    cmd->add_option("--min-displacement", o->min_disp, "Minimum displacement, meters");
    cmd->add_option("--out", o->out, "Output id list")->required();
    cmd->callback([=, &action] {
      action = [=] {
        constexpr double deg = std::numbers::pi / 180.0;
        SubsetCriteria c;
        if (o->forward_deg >= 0) c.max_forward_angle = o->forward_deg * deg;
        else if (o->forward) c.max_forward_angle = SubsetCriteria::kDefaultForwardAngle;
        if (o->rotation_deg >= 0) c.max_rotation = o->rotation_deg * deg;
        else if (o->no_rotation) c.max_rotation = SubsetCriteria::kDefaultRotation;
        if (o->min_disp >= 0) c.min_displacement = o->min_disp;
        std::set<FrameId> excluded;
        if (!o->manifest.empty()) excluded = load_manifest(o->manifest).excluded_ids();
        const auto ids = filter_eval_subset(read_tum(o->traj), c, excluded);
        write_id_list(o->out, ids);
        std::cout << ids.size() << " frames kept\n";
        return 0;
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    return action ? action() : 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
