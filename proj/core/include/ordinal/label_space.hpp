#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ordinal {

/// Position of a class inside the ordered domain S (0 = lowest ordinal).
using ClassIndex = std::size_t;

enum class LabelDistanceKind {
  Absolute,    // |i - j|
  Squared,     // (i - j)^2
  ExpDecibel,  // |10^(i/10) - 10^(j/10)|
  Custom,      // dense |S| x |S| table
};

struct ClassInfo {
  std::string id;
  int ordinal = 0;
};

/// Ordered class domain S = N ∪ M with a label distance D_y.
///
/// Classes are stored sorted by ordinal position, so ClassIndex order is the
/// label order. A LabelSpace is immutable once built; use with_missing() to
/// derive a space with a different missing set.
class LabelSpace {
 public:
  LabelSpace(std::vector<ClassInfo> domain, const std::vector<std::string>& missing,
             LabelDistanceKind kind = LabelDistanceKind::Absolute,
             std::vector<double> custom_table = {});

  /// Convenience: classes "c<k>" with ordinals first..first+n-1.
  static LabelSpace numbered(int n_classes, int first_ordinal = 1,
                             LabelDistanceKind kind = LabelDistanceKind::Absolute);

  [[nodiscard]] std::size_t size() const noexcept { return classes_.size(); }
  [[nodiscard]] const ClassInfo& info(ClassIndex c) const;
  [[nodiscard]] const std::string& id(ClassIndex c) const { return info(c).id; }
  [[nodiscard]] int ordinal(ClassIndex c) const { return info(c).ordinal; }
  [[nodiscard]] ClassIndex index_of(std::string_view id) const;
  [[nodiscard]] bool contains(std::string_view id) const;

  [[nodiscard]] bool is_missing(ClassIndex c) const;
  [[nodiscard]] const std::vector<ClassIndex>& present() const noexcept { return present_; }
  [[nodiscard]] const std::vector<ClassIndex>& missing() const noexcept { return missing_; }

  [[nodiscard]] LabelDistanceKind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::vector<double>& custom_table() const noexcept { return custom_; }

  /// D_y between two classes of the domain.
  [[nodiscard]] double distance(ClassIndex i, ClassIndex j) const;

  [[nodiscard]] LabelSpace with_missing(const std::vector<ClassIndex>& missing) const;

 private:
  std::vector<ClassInfo> classes_;
  std::vector<bool> missing_flag_;
  std::vector<ClassIndex> present_;
  std::vector<ClassIndex> missing_;
  LabelDistanceKind kind_;
  std::vector<double> custom_;
  std::unordered_map<std::string, ClassIndex> by_id_;
};

/// D_y evaluated on raw ordinal positions (no table lookup).
[[nodiscard]] double label_distance(LabelDistanceKind kind, int ordinal_i, int ordinal_j);

[[nodiscard]] double label_distance(const LabelSpace& space, std::string_view i, std::string_view j);

[[nodiscard]] std::string_view to_string(LabelDistanceKind kind);
[[nodiscard]] LabelDistanceKind label_distance_from_string(std::string_view name);

}  // namespace ordinal
