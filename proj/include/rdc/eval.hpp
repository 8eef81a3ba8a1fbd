#pragma once

#include "rdc/depth_map.hpp"
#include "rdc/geometry.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdc {

/// One pixel of the pooled evaluation set.
struct EvaluationSample {
  double gt = 0;   // ground-truth depth, meters
  double est = 0;  // estimated depth, meters
  FrameId frame_id = 0;
  int u = 0, v = 0;
  /// Distance to the frame's flight path vector; absent when undefined.
  std::optional<double> fpv_pixels;
  std::optional<double> fpv_radians;
};

/// Summation in fixed 1024-element chunks. Adding the same values in the
/// same order always yields the same bits.
class ChunkedSum {
 public:
  void add(double x) {
    chunk_ += x;
    if (++in_chunk_ == kChunk) flush();
  }
  double total() const { return total_ + chunk_; }

 private:
  static constexpr int kChunk = 1024;
  void flush() {
    total_ += chunk_;
    chunk_ = 0;
    in_chunk_ = 0;
  }
  double total_ = 0, chunk_ = 0;
  int in_chunk_ = 0;
};

/// Error functions. The Std* variants reduce as sqrt(mean(square)).
enum class ErrorFunction { Absolute, Relative, AbsLog, StdAbsolute, StdLog };

ErrorFunction parse_error_function(const std::string& name);
std::string to_string(ErrorFunction f);

struct MetricRecord {
  double mae = 0, mre = 0, mle = 0, sae = 0, sle = 0;
  /// Fractions with |ln(est/gt)| <= ln(delta) for delta = 1.25, 1.25^2, 1.25^3.
  double p125 = 0, p125_2 = 0, p125_3 = 0;
  std::size_t sample_count = 0;
};

/// Globally pooled metrics over every sample (natural logarithms).
/// Throws std::invalid_argument on an empty set.
MetricRecord scalar_metrics(std::span<const EvaluationSample> samples);

/// Mean of f over all samples, reduced the same way as scalar_metrics.
double reduce_error(std::span<const EvaluationSample> samples, ErrorFunction f);

struct BinnedError {
  std::vector<double> edges;
  /// Per bin; nullopt for bins without samples.
  std::vector<std::optional<double>> values;
  std::vector<std::size_t> counts;
};

/// Mean error per ground-truth depth bin. Bins are [e_i, e_i+1), the last
/// one closed; samples outside the edges are ignored.
BinnedError depth_wise_histogram(std::span<const EvaluationSample> samples,
                                 std::span<const double> bin_edges,
                                 ErrorFunction f = ErrorFunction::AbsLog);

/// `count` log-spaced bins between the 1st and 99th percentile of gt depth.
std::vector<double> default_depth_bins(std::span<const EvaluationSample> samples, int count = 40);

struct RatioHistogram {
  std::vector<double> edges;     // over log10(est / gt)
  std::vector<double> fraction;  // sums to 1
  /// Empirical quantiles at 2.5%, 25%, 50%, 75%, 97.5% of log10(est / gt).
  std::array<double, 5> quantiles{};
};

/// Normalized histogram of log10(est / gt). Samples beyond the outer edges
/// count toward the nearest end bin.
RatioHistogram log_ratio_histogram(std::span<const EvaluationSample> samples,
                                   std::span<const double> bin_edges);

/// Symmetric bins around 0 wide enough for every sample.
std::vector<double> default_ratio_bins(std::span<const EvaluationSample> samples, int count = 101);

/// Linear-interpolated empirical quantile of sorted values.
double quantile_sorted(std::span<const double> sorted, double q);

struct Fpv {
  double u = 0, v = 0;
  /// Unit direction of travel in the camera frame of the first pose.
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
  bool defined = false;
};

/// Image point the camera moves toward between `from` and `to`.
Fpv compute_fpv(const Pose& from, const Pose& to, const CameraIntrinsics& k);

enum class FpvUnits { Pixels, Radians };

/// Mean error per bin of distance to the frame's FPV. Samples without a
/// defined FPV are skipped.
BinnedError fpv_metric(std::span<const EvaluationSample> samples,
                       std::span<const double> bin_edges, FpvUnits units,
                       ErrorFunction f = ErrorFunction::AbsLog);

struct FrameDepth {
  FrameId frame_id = 0;
  DepthMap depth;
};

/// Pools every pixel valid in both maps across frames. Frames in `excluded`
/// are skipped. FPV distances come from the motion toward the next frame of
/// `trajectory` (or from the previous frame for the last one).
/// Throws std::invalid_argument when gt/est frame ids or sizes disagree.
std::vector<EvaluationSample> pool_samples(std::span<const FrameDepth> gt,
                                           std::span<const FrameDepth> est,
                                           const Trajectory& trajectory,
                                           const CameraIntrinsics& k,
                                           const std::set<FrameId>& excluded = {});

enum class ScaleMode { PerFrame, Global };

struct ScaleRecovery {
  std::map<FrameId, double> scale;
  std::vector<FrameId> skipped;
  /// Median of the per-frame scales.
  double global = 1;
};

/// Per-frame factor |t_gt| / |t_est| from consecutive displacements of frames
/// present in both trajectories. Frame i uses the step from its predecessor
/// (the first frame uses the step to its successor). In Global mode every
/// frame gets the median. Near-zero estimated displacements are skipped.
ScaleRecovery recover_scale(const Trajectory& est, const Trajectory& gt,
                            ScaleMode mode = ScaleMode::PerFrame);

}  // namespace rdc
