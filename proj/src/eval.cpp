#include "rdc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <unordered_map>

namespace rdc {
namespace {

// ln(1.25), ln(1.25^2), ln(1.25^3)
const double kLogDelta1 = std::log(1.25);
const double kLogDelta2 = std::log(1.5625);
const double kLogDelta3 = std::log(1.953125);

double log_diff(const EvaluationSample& s) { return std::log(s.est) - std::log(s.gt); }

double error_value(const EvaluationSample& s, ErrorFunction f) {
  switch (f) {
    case ErrorFunction::Absolute:
      return std::abs(s.est - s.gt);
    case ErrorFunction::Relative:
      return std::abs(s.est - s.gt) / s.gt;
    case ErrorFunction::AbsLog:
      return std::abs(log_diff(s));
    case ErrorFunction::StdAbsolute: {
      const double d = s.est - s.gt;
      return d * d;
    }
    case ErrorFunction::StdLog: {
      const double d = log_diff(s);
      return d * d;
    }
  }
  return 0;
}

double finish(double total, std::size_t n, ErrorFunction f) {
  const double mean = total / double(n);
  return (f == ErrorFunction::StdAbsolute || f == ErrorFunction::StdLog) ? std::sqrt(mean) : mean;
}

std::optional<std::size_t> bin_index(std::span<const double> edges, double x) {
  if (edges.size() < 2 || !(x >= edges.front()) || !(x <= edges.back())) return std::nullopt;
  if (x == edges.back()) return edges.size() - 2;
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

void check_edges(std::span<const double> edges) {
  if (edges.size() < 2) throw std::invalid_argument("need at least two bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1]))
      throw std::invalid_argument("bin edges must be strictly increasing");
}

template <typename Key>
BinnedError binned(std::span<const EvaluationSample> samples, std::span<const double> edges,
                   ErrorFunction f, Key key) {
  check_edges(edges);
  const std::size_t nb = edges.size() - 1;
  std::vector<ChunkedSum> sums(nb);
  BinnedError out;
  out.edges.assign(edges.begin(), edges.end());
  out.counts.assign(nb, 0);
  for (const auto& s : samples) {
    const std::optional<double> k = key(s);
    if (!k) continue;
    const auto b = bin_index(edges, *k);
    if (!b) continue;
    sums[*b].add(error_value(s, f));
    ++out.counts[*b];
  }
  out.values.resize(nb);
  for (std::size_t b = 0; b < nb; ++b)
    if (out.counts[b] > 0) out.values[b] = finish(sums[b].total(), out.counts[b], f);
  return out;
}

}  // namespace

ErrorFunction parse_error_function(const std::string& name) {
  if (name == "abs" || name == "mae") return ErrorFunction::Absolute;
  if (name == "rel" || name == "mre") return ErrorFunction::Relative;
  if (name == "abslog" || name == "mle") return ErrorFunction::AbsLog;
  if (name == "sae") return ErrorFunction::StdAbsolute;
  if (name == "sle") return ErrorFunction::StdLog;
  throw std::invalid_argument("unknown error function '" + name + "'");
}

std::string to_string(ErrorFunction f) {
  switch (f) {
    case ErrorFunction::Absolute: return "mae";
    case ErrorFunction::Relative: return "mre";
    case ErrorFunction::AbsLog: return "mle";
    case ErrorFunction::StdAbsolute: return "sae";
    case ErrorFunction::StdLog: return "sle";
  }
  return "?";
}

double reduce_error(std::span<const EvaluationSample> samples, ErrorFunction f) {
  if (samples.empty()) throw std::invalid_argument("empty evaluation set");
  ChunkedSum sum;
  for (const auto& s : samples) sum.add(error_value(s, f));
  return finish(sum.total(), samples.size(), f);
}

MetricRecord scalar_metrics(std::span<const EvaluationSample> samples) {
  if (samples.empty()) throw std::invalid_argument("empty evaluation set");
  ChunkedSum abs, rel, alog, sq, sqlog;
  std::size_t p1 = 0, p2 = 0, p3 = 0;
  for (const auto& s : samples) {
    abs.add(error_value(s, ErrorFunction::Absolute));
    rel.add(error_value(s, ErrorFunction::Relative));
    alog.add(error_value(s, ErrorFunction::AbsLog));
    sq.add(error_value(s, ErrorFunction::StdAbsolute));
    sqlog.add(error_value(s, ErrorFunction::StdLog));
    const double l = std::abs(log_diff(s));
    p1 += l <= kLogDelta1;
    p2 += l <= kLogDelta2;
    p3 += l <= kLogDelta3;
  }
  const std::size_t n = samples.size();
  MetricRecord m;
  m.sample_count = n;
  m.mae = finish(abs.total(), n, ErrorFunction::Absolute);
  m.mre = finish(rel.total(), n, ErrorFunction::Relative);
  m.mle = finish(alog.total(), n, ErrorFunction::AbsLog);
  m.sae = finish(sq.total(), n, ErrorFunction::StdAbsolute);
  m.sle = finish(sqlog.total(), n, ErrorFunction::StdLog);
  m.p125 = double(p1) / double(n);
  m.p125_2 = double(p2) / double(n);
  m.p125_3 = double(p3) / double(n);
  return m;
}

BinnedError depth_wise_histogram(std::span<const EvaluationSample> samples,
                                 std::span<const double> bin_edges, ErrorFunction f) {
  return binned(samples, bin_edges, f,
                [](const EvaluationSample& s) -> std::optional<double> { return s.gt; });
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * double(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - double(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> default_depth_bins(std::span<const EvaluationSample> samples, int count) {
  if (samples.empty() || count < 1) throw std::invalid_argument("cannot bin an empty set");
  std::vector<double> gt;
  gt.reserve(samples.size());
  for (const auto& s : samples) gt.push_back(s.gt);
  std::sort(gt.begin(), gt.end());
  double lo = quantile_sorted(gt, 0.01), hi = quantile_sorted(gt, 0.99);
  if (!(hi > lo)) {
    lo *= 0.99;
    hi *= 1.01;
  }
  std::vector<double> edges(static_cast<std::size_t>(count) + 1);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i <= count; ++i) edges[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / count);
  edges.front() = lo;
  edges.back() = hi;
  return edges;
}

std::vector<double> default_ratio_bins(std::span<const EvaluationSample> samples, int count) {
  if (count < 1) throw std::invalid_argument("need at least one bin");
  double r = 0;
  for (const auto& s : samples) r = std::max(r, std::abs(std::log10(s.est / s.gt)));
  r = r > 0 ? r * (1 + 1e-9) : 0.05;
  std::vector<double> edges(static_cast<std::size_t>(count) + 1);
  for (int i = 0; i <= count; ++i) edges[static_cast<std::size_t>(i)] = -r + 2 * r * i / count;
  return edges;
}

RatioHistogram log_ratio_histogram(std::span<const EvaluationSample> samples,
                                   std::span<const double> bin_edges) {
  check_edges(bin_edges);
  if (samples.empty()) throw std::invalid_argument("empty evaluation set");
  const std::size_t nb = bin_edges.size() - 1;
  std::vector<std::size_t> counts(nb, 0);
  std::vector<double> ratios;
  ratios.reserve(samples.size());
  for (const auto& s : samples) {
    const double x = std::log10(s.est / s.gt);
    ratios.push_back(x);
    std::size_t b = 0;
    if (x >= bin_edges.back()) {
      b = nb - 1;
    } else if (x > bin_edges.front()) {
      b = *bin_index(bin_edges, x);
    }
    ++counts[b];
  }
  RatioHistogram h;
  h.edges.assign(bin_edges.begin(), bin_edges.end());
  h.fraction.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) h.fraction[b] = double(counts[b]) / double(samples.size());
  std::sort(ratios.begin(), ratios.end());
  const double qs[5] = {0.025, 0.25, 0.5, 0.75, 0.975};
  for (int i = 0; i < 5; ++i) h.quantiles[static_cast<std::size_t>(i)] = quantile_sorted(ratios, qs[i]);
  return h;
}

namespace {

// FPV of a world-frame displacement seen from the camera at `at`.
Fpv fpv_of_motion(const Pose& at, const Eigen::Vector3d& displacement, const CameraIntrinsics& k) {
  Fpv f;
  if (displacement.norm() < 1e-9) return f;
  const Eigen::Vector3d dc = at.rotation().conjugate() * displacement;
  if (!(dc.z() > 0)) return f;
  f.direction = dc.normalized();
  f.u = k.fx * dc.x() / dc.z() + k.cx;
  f.v = k.fy * dc.y() / dc.z() + k.cy;
  f.defined = true;
  return f;
}

}  // namespace

Fpv compute_fpv(const Pose& from, const Pose& to, const CameraIntrinsics& k) {
  return fpv_of_motion(from, to.translation() - from.translation(), k);
}

BinnedError fpv_metric(std::span<const EvaluationSample> samples,
                       std::span<const double> bin_edges, FpvUnits units, ErrorFunction f) {
  return binned(samples, bin_edges, f, [units](const EvaluationSample& s) {
    return units == FpvUnits::Pixels ? s.fpv_pixels : s.fpv_radians;
  });
}

std::vector<EvaluationSample> pool_samples(std::span<const FrameDepth> gt,
                                           std::span<const FrameDepth> est,
                                           const Trajectory& trajectory,
                                           const CameraIntrinsics& k,
                                           const std::set<FrameId>& excluded) {
  std::unordered_map<FrameId, const DepthMap*> est_by_id;
  for (const auto& e : est) est_by_id[e.frame_id] = &e.depth;
  if (est_by_id.size() != gt.size())
    throw std::invalid_argument("frame-id mismatch: " + std::to_string(gt.size()) +
                                " ground-truth frames vs " + std::to_string(est_by_id.size()) +
                                " estimated frames");
  std::unordered_map<FrameId, std::size_t> traj_index;
  for (std::size_t i = 0; i < trajectory.size(); ++i) traj_index[trajectory[i].frame_id()] = i;

  std::vector<EvaluationSample> out;
  for (const auto& g : gt) {
    const auto it = est_by_id.find(g.frame_id);
    if (it == est_by_id.end())
      throw std::invalid_argument("frame-id mismatch: no estimate for frame " +
                                  std::to_string(g.frame_id));
    const DepthMap& e = *it->second;
    if (e.width() != g.depth.width() || e.height() != g.depth.height())
      throw std::invalid_argument("depth map size mismatch at frame " + std::to_string(g.frame_id));
    if (excluded.count(g.frame_id)) continue;

    Fpv fpv;
    if (const auto ti = traj_index.find(g.frame_id); ti != traj_index.end() && trajectory.size() > 1) {
      const std::size_t i = ti->second;
      fpv = i + 1 < trajectory.size()
                ? compute_fpv(trajectory[i], trajectory[i + 1], k)
                : fpv_of_motion(trajectory[i],
                                trajectory[i].translation() - trajectory[i - 1].translation(), k);
    }

    for (int v = 0; v < g.depth.height(); ++v) {
      for (int u = 0; u < g.depth.width(); ++u) {
        if (!g.depth.valid(u, v) || !e.valid(u, v)) continue;
        EvaluationSample s;
        s.gt = g.depth(u, v);
        s.est = e(u, v);
        s.frame_id = g.frame_id;
        s.u = u;
        s.v = v;
        if (fpv.defined) {
          s.fpv_pixels = std::hypot(u - fpv.u, v - fpv.v);
          const Eigen::Vector3d ray = pixel_ray(k, u, v).normalized();
          s.fpv_radians = std::atan2(ray.cross(fpv.direction).norm(), ray.dot(fpv.direction));
        }
        out.push_back(s);
      }
    }
  }
  return out;
}

ScaleRecovery recover_scale(const Trajectory& est, const Trajectory& gt, ScaleMode mode) {
  std::unordered_map<FrameId, const Pose*> gt_by_id;
  for (const auto& p : gt) gt_by_id[p.frame_id()] = &p;
  std::vector<std::pair<const Pose*, const Pose*>> matched;
  for (const auto& p : est)
    if (const auto it = gt_by_id.find(p.frame_id()); it != gt_by_id.end())
      matched.emplace_back(&p, it->second);
  if (matched.size() < 2)
    throw std::invalid_argument("scale recovery needs at least two frames common to both trajectories");

  ScaleRecovery r;
  std::vector<double> scales;
  for (std::size_t i = 0; i < matched.size(); ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i == 0 ? 1 : i;
    const double d_est =
        (matched[b].first->translation() - matched[a].first->translation()).norm();
    const double d_gt =
        (matched[b].second->translation() - matched[a].second->translation()).norm();
    const FrameId id = matched[i].first->frame_id();
    if (d_est <= 1e-9) {
      std::cerr << "warning: frame " << id << " has near-zero estimated displacement, skipped\n";
      r.skipped.push_back(id);
      continue;
    }
    r.scale[id] = d_gt / d_est;
    scales.push_back(d_gt / d_est);
  }
  if (!scales.empty()) {
    std::sort(scales.begin(), scales.end());
    r.global = quantile_sorted(scales, 0.5);
  }
  if (mode == ScaleMode::Global)
    for (auto& [id, s] : r.scale) s = r.global;
  return r;
}

}  // namespace rdc
