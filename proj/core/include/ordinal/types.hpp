#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ordinal/label_space.hpp"

namespace ordinal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kUnitNormTolerance = 1e-6;

/// An L2-normalized embedding f(x).
class FeatureVector {
 public:
  FeatureVector() = default;

  /// Wraps a vector that is already unit norm (checked to kUnitNormTolerance).
  explicit FeatureVector(Vector unit);

  /// Normalizes `raw`; throws on a zero or non-finite vector.
  static FeatureVector normalize(const Vector& raw);

  [[nodiscard]] const Vector& values() const noexcept { return v_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return v_.size(); }
  [[nodiscard]] double operator[](Eigen::Index k) const { return v_[k]; }

 private:
  Vector v_;
};

/// One fixed-length window of a multivariate stream: values is (window_length x n_channels).
class Segment {
 public:
  Segment(Matrix values, std::optional<ClassIndex> label, std::int64_t source_index);

  [[nodiscard]] const Matrix& values() const noexcept { return values_; }
  [[nodiscard]] Eigen::Index window_length() const noexcept { return values_.rows(); }
  [[nodiscard]] Eigen::Index n_channels() const noexcept { return values_.cols(); }
  [[nodiscard]] const std::optional<ClassIndex>& label() const noexcept { return label_; }
  [[nodiscard]] std::int64_t source_index() const noexcept { return source_index_; }

  /// Label accessor for code paths that require a labeled segment.
  [[nodiscard]] ClassIndex class_index() const;

 private:
  Matrix values_;
  std::optional<ClassIndex> label_;
  std::int64_t source_index_ = 0;
};

/// D(a, b) = ||a - b||_2^2.
[[nodiscard]] double squared_distance(const Vector& a, const Vector& b);

[[nodiscard]] inline double feature_distance(const FeatureVector& a, const FeatureVector& b) {
  return squared_distance(a.values(), b.values());
}

/// Throws unless every label in `segments` is set and belongs to `space`.
void check_labels(std::span<const Segment> segments, const LabelSpace& space);

}  // namespace ordinal
