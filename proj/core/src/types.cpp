#include "ordinal/types.hpp"

#include <cmath>
#include <string>

#include "ordinal/error.hpp"

namespace ordinal {

FeatureVector::FeatureVector(Vector unit) : v_(std::move(unit)) {
  if (v_.size() == 0) throw Error("feature vector must be non-empty");
  if (!v_.allFinite()) throw Error("feature vector has non-finite components");
  if (std::abs(v_.norm() - 1.0) > kUnitNormTolerance) {
    throw Error("feature vector is not unit norm (norm " + std::to_string(v_.norm()) + ")");
  }
}

FeatureVector FeatureVector::normalize(const Vector& raw) {
  const double n = raw.norm();
  if (!std::isfinite(n)) throw Error("cannot normalize a non-finite vector");
  if (n == 0.0) throw Error("degenerate embedding: zero vector before normalization");
  return FeatureVector(raw / n);
}

Segment::Segment(Matrix values, std::optional<ClassIndex> label, std::int64_t source_index)
    : values_(std::move(values)), label_(label), source_index_(source_index) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw Error("segment needs window_length >= 1 and n_channels >= 1");
  }
  if (!values_.allFinite()) {
    throw Error("segment at source index " + std::to_string(source_index) +
                " contains non-finite values");
  }
}

ClassIndex Segment::class_index() const {
  if (!label_) throw Error("segment at source index " + std::to_string(source_index_) + " is unlabeled");
  return *label_;
}

double squared_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  return (a - b).squaredNorm();
}

void check_labels(std::span<const Segment> segments, const LabelSpace& space) {
  for (const auto& s : segments) {
    if (s.class_index() >= space.size()) {
      throw Error("segment at source index " + std::to_string(s.source_index()) +
                  " has a label outside the domain");
    }
  }
}

}  // namespace ordinal
