#pragma once

#include "rdc/eval.hpp"
#include "rdc/io.hpp"
#include "rdc/registration.hpp"
#include "rdc/render.hpp"
#include "rdc/sampling.hpp"
#include "rdc/trajfilter.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdc {

// ---------------------------------------------------------------------------
// Individual stages. Each reads its inputs from files and writes its outputs,
// so they can run from the command line or inside run_pipeline.

std::vector<FrameId> sample_stage(const fs::path& trajectory, const SamplingParams& params,
                                  const fs::path& out);

struct RegisterParams {
  IcpParams icp;
  /// Overrides scale refinement in ICP. By default scale is refined only
  /// when the initialization came from picked pairs with estimated scale.
  std::optional<bool> estimate_scale;
  /// Neighbors used when the destination cloud needs estimated normals.
  int normal_neighbors = 10;
};

struct RegisterPaths {
  fs::path src, dst;
  std::optional<fs::path> pairs;
  fs::path transform;
  std::optional<fs::path> overlay;
  /// dst cloud with normals and visibility transferred from the aligned src.
  std::optional<fs::path> registered;
  /// Mesh in the src frame and where to write it mapped into the dst frame.
  std::optional<fs::path> mesh_in, mesh_out;
};

IcpResult register_stage(const RegisterPaths& paths, const RegisterParams& params);

/// transform.json: {"scale", "quaternion": [w, x, y, z], "translation", ...}
Similarity read_transform(const fs::path& path);
void write_transform(const fs::path& path, const IcpResult& result);

/// Filters `in`, optionally mapping it through `transform` first, and writes
/// the smoothed trajectory and a JSON report of outliers and residuals.
FilterReport filter_stage(const fs::path& in, const fs::path& out, const fs::path& report,
                          const FilterParams& params,
                          const std::optional<fs::path>& transform = std::nullopt);

/// Outlier ids listed in a filter report.
std::vector<FrameId> read_outlier_ids(const fs::path& report);

struct RenderParams {
  GtRenderParams gt;
  /// Points farther than this from every mesh vertex become splats, meters.
  double isolation_radius = 0.2;
  std::optional<double> half_size;
};

struct RenderPaths {
  fs::path cloud;
  std::optional<fs::path> mesh;
  fs::path trajectory, intrinsics;
  /// Outliers listed here are flagged in the output manifest.
  std::optional<fs::path> filter_report;
  /// Receives one PNG per frame and manifest.json.
  fs::path out_dir;
};

/// Returns the number of frames rendered.
std::size_t render_stage(const RenderPaths& paths, const RenderParams& params);

struct EvaluateParams {
  ScaleMode scale = ScaleMode::PerFrame;
  ErrorFunction error = ErrorFunction::AbsLog;
  int depth_bins = 40;
  int ratio_bins = 101;
  int fpv_bins = 20;
  FpvUnits fpv_units = FpvUnits::Pixels;
};

struct EvaluatePaths {
  /// Ground-truth PNG directory; frames flagged in its manifest.json are skipped.
  fs::path gt_dir, pred_dir;
  fs::path trajectory, pred_trajectory, intrinsics;
  fs::path report;
  std::optional<fs::path> plots_dir;
};

MetricRecord evaluate_stage(const EvaluatePaths& paths, const EvaluateParams& params);

// ---------------------------------------------------------------------------
// Orchestration

/// Bad configuration or missing inputs, detected before any stage runs.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stage failed or halted; the message names the stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelinePaths {
  fs::path lidar, dense;
  std::optional<fs::path> mesh;
  fs::path raw_trajectory, intrinsics;
  std::optional<fs::path> pairs;
  std::optional<fs::path> predictions, pred_trajectory;
  fs::path output;
};

struct PipelineConfig {
  PipelinePaths paths;
  /// Subset of sample, register, filter-traj, render, evaluate in that order.
  std::vector<std::string> stages{"sample", "register", "filter-traj", "render", "evaluate"};
  SamplingParams sample;
  RegisterParams registration;
  FilterParams filter;
  RenderParams render;
  EvaluateParams evaluate;
};

/// Reads a JSON config; relative paths resolve against the file's directory.
/// Throws ValidationError.
PipelineConfig load_config(const fs::path& path);
/// Writes paths relative to the config file's directory.
void save_config(const fs::path& path, const PipelineConfig& config);

/// Config for a dataset produced by synth::write_dataset, output under `output`.
PipelineConfig synthetic_dataset_config(const fs::path& dataset_dir, const fs::path& output);

/// Checks stage names, order and that every input either exists or is made
/// by an earlier requested stage. Throws ValidationError.
void validate_config(const PipelineConfig& config);

struct RunOptions {
  bool force = false;
  /// Stop after registration until `<output>/register/APPROVED` exists.
  bool require_review = false;
  std::ostream* log = nullptr;
};

struct StageOutcome {
  std::string name;
  bool skipped = false;
  double seconds = 0;
};

struct RunReport {
  std::vector<StageOutcome> stages;
  std::optional<MetricRecord> evaluation;
};

/// Runs the requested stages in order, skipping stages whose recorded
/// parameters and inputs are unchanged. Writes `<output>/run_report.json`.
/// Throws ValidationError before running anything, StageError afterwards.
RunReport run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

/// Stage artifact locations under the output root.
struct StageArtifacts {
  explicit StageArtifacts(const fs::path& root) : root(root) {}
  fs::path root;
  fs::path subset() const { return root / "sample" / "subset.txt"; }
  fs::path transform() const { return root / "register" / "transform.json"; }
  fs::path overlay() const { return root / "register" / "overlay.ply"; }
  fs::path registered() const { return root / "register" / "registered.ply"; }
  fs::path mesh() const { return root / "register" / "mesh.ply"; }
  fs::path approval() const { return root / "register" / "APPROVED"; }
  fs::path smooth() const { return root / "filter-traj" / "smooth.tum"; }
  fs::path filter_report() const { return root / "filter-traj" / "report.json"; }
  fs::path depth_dir() const { return root / "render" / "depth"; }
  fs::path eval_report() const { return root / "evaluate" / "report.json"; }
  fs::path plots_dir() const { return root / "evaluate" / "plots"; }
  fs::path run_report() const { return root / "run_report.json"; }
};

}  // namespace rdc
