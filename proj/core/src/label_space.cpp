#include "ordinal/label_space.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ordinal/error.hpp"

namespace ordinal {

LabelSpace::LabelSpace(std::vector<ClassInfo> domain, const std::vector<std::string>& missing,
                       LabelDistanceKind kind, std::vector<double> custom_table)
    : classes_(std::move(domain)), kind_(kind), custom_(std::move(custom_table)) {
  if (classes_.size() < 2) throw Error("label space needs at least two classes");

  // A custom table is indexed in the caller's order; remember it before sorting.
  std::vector<std::size_t> order(classes_.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return classes_[a].ordinal < classes_[b].ordinal;
  });
  std::vector<ClassInfo> sorted;
  sorted.reserve(classes_.size());
  for (auto k : order) sorted.push_back(classes_[k]);

  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k].ordinal == sorted[k - 1].ordinal) {
      throw Error("duplicate ordinal position " + std::to_string(sorted[k].ordinal));
    }
  }

  const std::size_t n = sorted.size();
  if (kind_ == LabelDistanceKind::Custom) {
    if (custom_.size() != n * n) {
      throw Error("custom label distance table must have " + std::to_string(n * n) + " entries");
    }
    std::vector<double> permuted(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) permuted[i * n + j] = custom_[order[i] * n + order[j]];
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double d = permuted[i * n + j];
        if (!std::isfinite(d)) throw Error("custom label distance table has a non-finite entry");
        if (i == j && d != 0.0) throw Error("custom label distance table needs a zero diagonal");
        if (i != j && !(d > 0.0)) throw Error("custom label distance must be positive off the diagonal");
        if (d != permuted[j * n + i]) throw Error("custom label distance table must be symmetric");
      }
    }
    custom_ = std::move(permuted);
  } else if (!custom_.empty()) {
    throw Error("custom label distance table given for a built-in distance kind");
  }

  classes_ = std::move(sorted);
  for (ClassIndex c = 0; c < n; ++c) {
    if (!by_id_.emplace(classes_[c].id, c).second) {
      throw Error("duplicate class identifier '" + classes_[c].id + "'");
    }
  }

  missing_flag_.assign(n, false);
  for (const auto& id : missing) {
    const auto c = index_of(id);
    if (missing_flag_[c]) throw Error("class '" + id + "' listed as missing twice");
    missing_flag_[c] = true;
  }
  for (ClassIndex c = 0; c < n; ++c) (missing_flag_[c] ? missing_ : present_).push_back(c);
  if (present_.size() < 2) throw Error("at least two classes must be present in training");
}

LabelSpace LabelSpace::numbered(int n_classes, int first_ordinal, LabelDistanceKind kind) {
  std::vector<ClassInfo> domain;
  for (int k = 0; k < n_classes; ++k) {
    domain.push_back({"c" + std::to_string(first_ordinal + k), first_ordinal + k});
  }
  return LabelSpace(std::move(domain), {}, kind);
}

const ClassInfo& LabelSpace::info(ClassIndex c) const {
  if (c >= classes_.size()) throw Error("class index " + std::to_string(c) + " out of range");
  return classes_[c];
}

ClassIndex LabelSpace::index_of(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) throw Error("unknown class '" + std::string(id) + "'");
  return it->second;
}

bool LabelSpace::contains(std::string_view id) const {
  return by_id_.find(std::string(id)) != by_id_.end();
}

bool LabelSpace::is_missing(ClassIndex c) const {
  if (c >= classes_.size()) throw Error("class index " + std::to_string(c) + " out of range");
  return missing_flag_[c];
}

double LabelSpace::distance(ClassIndex i, ClassIndex j) const {
  const auto& a = info(i);
  const auto& b = info(j);
  if (kind_ == LabelDistanceKind::Custom) return custom_[i * classes_.size() + j];
  return label_distance(kind_, a.ordinal, b.ordinal);
}

LabelSpace LabelSpace::with_missing(const std::vector<ClassIndex>& missing) const {
  std::vector<std::string> ids;
  ids.reserve(missing.size());
  for (auto c : missing) ids.push_back(id(c));
  return LabelSpace(classes_, ids, kind_, custom_);
}

double label_distance(LabelDistanceKind kind, int ordinal_i, int ordinal_j) {
  const double i = ordinal_i;
  const double j = ordinal_j;
  switch (kind) {
    case LabelDistanceKind::Absolute:
      return std::abs(i - j);
    case LabelDistanceKind::Squared:
      return (i - j) * (i - j);
    case LabelDistanceKind::ExpDecibel:
      return std::abs(std::pow(10.0, i / 10.0) - std::pow(10.0, j / 10.0));
    case LabelDistanceKind::Custom:
      break;
  }
  throw Error("custom label distance requires a LabelSpace table");
}

double label_distance(const LabelSpace& space, std::string_view i, std::string_view j) {
  return space.distance(space.index_of(i), space.index_of(j));
}

std::string_view to_string(LabelDistanceKind kind) {
  switch (kind) {
    case LabelDistanceKind::Absolute: return "absolute";
    case LabelDistanceKind::Squared: return "squared";
    case LabelDistanceKind::ExpDecibel: return "exp_decibel";
    case LabelDistanceKind::Custom: return "custom";
  }
  return "unknown";
}

LabelDistanceKind label_distance_from_string(std::string_view name) {
  if (name == "absolute") return LabelDistanceKind::Absolute;
  if (name == "squared") return LabelDistanceKind::Squared;
  if (name == "exp_decibel") return LabelDistanceKind::ExpDecibel;
  if (name == "custom") return LabelDistanceKind::Custom;
  throw Error("unknown label distance '" + std::string(name) + "'");
}

}  // namespace ordinal
