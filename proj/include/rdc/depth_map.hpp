#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace rdc {

/// H x W grid of z-depths in meters. Zero or non-finite entries are invalid.
class DepthMap {
 public:
  using Storage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  DepthMap() = default;
  DepthMap(int width, int height) : values_(Storage::Zero(height, width)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("depth map size must be positive");
  }
  explicit DepthMap(Storage values) : values_(std::move(values)) {}

  int width() const { return static_cast<int>(values_.cols()); }
  int height() const { return static_cast<int>(values_.rows()); }

  double operator()(int u, int v) const { return values_(v, u); }
  double& operator()(int u, int v) { return values_(v, u); }

  bool valid(int u, int v) const { return is_valid(values_(v, u)); }
  static bool is_valid(double z) { return std::isfinite(z) && z > 0; }

  Eigen::Index valid_count() const {
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < values_.size(); ++i) n += is_valid(values_.data()[i]);
    return n;
  }

  const Storage& values() const { return values_; }
  Storage& values() { return values_; }

  bool operator==(const DepthMap& o) const {
    return values_.rows() == o.values_.rows() && values_.cols() == o.values_.cols() &&
           values_ == o.values_;
  }

 private:
  Storage values_;
};

}  // namespace rdc
