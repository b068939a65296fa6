#include "ordinal/retrieval.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "ordinal/error.hpp"

namespace ordinal {

EmbeddingStore::EmbeddingStore(const LabelSpace& space, std::span<const FeatureVector> features,
                               std::span<const ClassIndex> labels)
    : members_(space.size()), centroids_(space.size()), populations_(space.size()) {
  if (features.size() != labels.size()) throw Error("features and labels differ in length");
  if (features.empty()) throw Error("cannot build an embedding store from no features");
  dim_ = features.front().dim();
  for (std::size_t k = 0; k < features.size(); ++k) {
    const auto c = labels[k];
    if (c >= space.size()) throw Error("store label outside the domain");
    if (space.is_missing(c)) throw Error("class '" + space.id(c) + "' is missing and cannot have store members");
    if (features[k].dim() != dim_) throw Error("store features differ in dimension");
    members_[c].push_back(features[k].values());
  }
  for (auto c : space.present()) {
    if (members_[c].empty()) throw Error("present class '" + space.id(c) + "' has no training members");
    Vector sum = Vector::Zero(dim_);
    for (const auto& f : members_[c]) sum += f;
    centroids_[c] = sum / static_cast<double>(members_[c].size());
    auto& pop = populations_[c];
    pop.reserve(members_[c].size());
    for (const auto& f : members_[c]) pop.push_back(squared_distance(f, centroids_[c]));
    classes_.push_back(c);
  }
}

const Vector& EmbeddingStore::centroid(ClassIndex c) const {
  if (!has(c)) throw Error("no centroid for class index " + std::to_string(c));
  return centroids_[c];
}

std::span<const double> EmbeddingStore::population(ClassIndex c) const {
  if (!has(c)) throw Error("no distance population for class index " + std::to_string(c));
  return populations_[c];
}

std::span<const Vector> EmbeddingStore::members(ClassIndex c) const {
  if (!has(c)) throw Error("no members for class index " + std::to_string(c));
  return members_[c];
}

EmbeddingStore build_store(const EmbeddingModel& model, std::span<const Segment> segments,
                           const LabelSpace& space) {
  std::vector<FeatureVector> features;
  std::vector<ClassIndex> labels;
  features.reserve(segments.size());
  labels.reserve(segments.size());
  for (const auto& s : segments) {
    features.push_back(forward(model, s));
    labels.push_back(s.class_index());
  }
  return EmbeddingStore(space, features, labels);
}

LabelRankMatrix::LabelRankMatrix(const LabelSpace& space)
    : rows_(space.size()), cols_(space.present().size()), columns_(space.present()) {
  values_.reserve(rows_ * cols_);
  for (ClassIndex s = 0; s < rows_; ++s) {
    for (auto n : columns_) values_.push_back(space.distance(s, n));
  }
}

std::span<const double> LabelRankMatrix::row(ClassIndex s) const {
  if (s >= rows_) throw Error("label rank matrix row out of range");
  return std::span<const double>(values_).subspan(s * cols_, cols_);
}

ClassIndex knn_predict(const EmbeddingStore& store, const Vector& f_te, int k) {
  if (k < 1) throw Error("k must be >= 1");
  if (store.classes().empty()) throw Error("k-nn over an empty store");

  if (k == 1) {
    ClassIndex best = store.classes().front();
    double best_d = squared_distance(f_te, store.centroid(best));
    for (auto c : store.classes()) {
      const double d = squared_distance(f_te, store.centroid(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    return best;
  }

  struct Neighbour {
    double d;
    ClassIndex c;
  };
  std::vector<Neighbour> all;
  for (auto c : store.classes()) {
    for (const auto& m : store.members(c)) all.push_back({squared_distance(f_te, m), c});
  }
  const auto take = std::min(all.size(), static_cast<std::size_t>(k));
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    [](const auto& a, const auto& b) { return a.d < b.d || (a.d == b.d && a.c < b.c); });

  std::map<ClassIndex, std::pair<std::size_t, double>> votes;  // count, distance sum
  for (std::size_t m = 0; m < take; ++m) {
    auto& v = votes[all[m].c];
    ++v.first;
    v.second += all[m].d;
  }
  ClassIndex best = votes.begin()->first;
  std::size_t best_count = 0;
  double best_mean = 0.0;
  for (const auto& [c, v] : votes) {  // ascending class index
    const double mean = v.second / static_cast<double>(v.first);
    if (v.first > best_count || (v.first == best_count && mean < best_mean)) {
      best = c;
      best_count = v.first;
      best_mean = mean;
    }
  }
  return best;
}

PredictionTrace classify(const EmbeddingStore& store, const LabelRankMatrix& L, const Vector& f_te,
                         const LabelSpace& space, const ClassifyOptions& options) {
  const auto& present = space.present();
  if (present.size() < 2) throw Error("classification needs at least two present classes");
  if (L.rows() != space.size() || L.columns() != present) {
    throw Error("label rank matrix does not match the label space");
  }

  PredictionTrace t;
  t.feature_distances.reserve(present.size());
  for (auto n : present) t.feature_distances.push_back(squared_distance(f_te, store.centroid(n)));

  const auto& F = t.feature_distances;
  t.degenerate = std::all_of(F.begin(), F.end(), [&](double d) { return d == F.front(); });

  t.scores.resize(space.size());
  bool any_exact_row = false;
  for (ClassIndex s = 0; s < space.size(); ++s) {
    const auto row = L.row(s);
    if (t.degenerate) {
      const bool constant = std::all_of(row.begin(), row.end(), [&](double v) { return v == row.front(); });
      t.scores[s] = constant ? 1.0 : 0.0;
      any_exact_row = any_exact_row || constant;
    } else {
      t.scores[s] = rank_statistic(options.stat, F, row);
    }
  }

  if (t.degenerate && !any_exact_row) {
    t.branch = Branch::Knn;
    t.label = knn_predict(store, f_te, options.k);
    t.first = t.label;
    t.second = t.label;
    return t;
  }

  std::vector<double> mean_label_distance(space.size());
  for (ClassIndex s = 0; s < space.size(); ++s) {
    const auto row = L.row(s);
    mean_label_distance[s] = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
  }
  std::vector<ClassIndex> order(space.size());
  std::iota(order.begin(), order.end(), ClassIndex{0});
  std::stable_sort(order.begin(), order.end(), [&](ClassIndex a, ClassIndex b) {
    if (t.scores[a] != t.scores[b]) return t.scores[a] > t.scores[b];
    if (mean_label_distance[a] != mean_label_distance[b]) return mean_label_distance[a] < mean_label_distance[b];
    return a < b;
  });
  t.first = order[0];
  t.second = order[1];
  t.score_tie = t.scores[order[0]] == t.scores[order[1]] ||
                (order.size() > 2 && t.scores[order[1]] == t.scores[order[2]]);

  const bool first_missing = space.is_missing(t.first);
  const bool second_missing = space.is_missing(t.second);
  if (!first_missing && !second_missing) {
    t.branch = Branch::Knn;
    t.label = knn_predict(store, f_te, options.k);
  } else if (first_missing && second_missing) {
    t.branch = Branch::BothMissing;
    t.label = t.first;
  } else {
    t.branch = Branch::Test;
    const ClassIndex present_candidate = first_missing ? t.second : t.first;
    const ClassIndex missing_candidate = first_missing ? t.first : t.second;
    const double d = squared_distance(f_te, store.centroid(present_candidate));
    const auto outcome = missing_class_test(d, store.population(present_candidate), options.test);
    t.d_te = d;
    t.threshold = outcome.threshold;
    t.decision = outcome.decision;
    t.label = outcome.decision == Decision::RejectToMissing ? missing_candidate : present_candidate;
  }
  return t;
}

std::vector<Vector> interpolate_missing(const EmbeddingStore& store, const LabelSpace& space) {
  const auto& present = space.present();
  if (present.size() < 2) throw Error("interpolation needs at least two present classes");
  std::vector<Vector> out(space.size());
  for (auto c : present) out[c] = store.centroid(c);

  for (auto m : space.missing()) {
    const auto above = std::upper_bound(present.begin(), present.end(), m);
    const bool has_below = above != present.begin();
    const bool has_above = above != present.end();
    if (has_below && has_above) {
      const ClassIndex b = *(above - 1);
      const ClassIndex a = *above;
      const double to_b = space.distance(m, b);
      const double to_a = space.distance(m, a);
      out[m] = (to_a * store.centroid(b) + to_b * store.centroid(a)) / (to_b + to_a);
    } else if (has_above) {
      const ClassIndex p1 = *above;
      const ClassIndex p2 = *(above + 1);
      const double step = space.distance(m, p1) / space.distance(p1, p2);
      out[m] = store.centroid(p1) + step * (store.centroid(p1) - store.centroid(p2));
    } else {
      const ClassIndex p1 = present[present.size() - 1];
      const ClassIndex p2 = present[present.size() - 2];
      const double step = space.distance(m, p1) / space.distance(p1, p2);
      out[m] = store.centroid(p1) + step * (store.centroid(p1) - store.centroid(p2));
    }
  }
  return out;
}

ClassIndex baseline_predict(std::span<const Vector> centroids, const Vector& f_te) {
  if (centroids.empty()) throw Error("baseline prediction over no centroids");
  ClassIndex best = 0;
  double best_d = squared_distance(f_te, centroids[0]);
  for (ClassIndex c = 1; c < centroids.size(); ++c) {
    const double d = squared_distance(f_te, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<ClassIndex> window_correct(std::span<const ClassIndex> predictions, std::size_t w) {
  std::vector<ClassIndex> out(predictions.begin(), predictions.end());
  if (w == 0) return out;
  std::optional<ClassIndex> previous;
  for (std::size_t start = 0; start < out.size(); start += w) {
    const auto end = std::min(out.size(), start + w);
    std::map<ClassIndex, std::size_t> counts;
    for (auto k = start; k < end; ++k) ++counts[out[k]];
    std::size_t top = 0;
    for (const auto& [c, n] : counts) top = std::max(top, n);
    ClassIndex winner = 0;
    bool found = false;
    if (previous) {
      const auto it = counts.find(*previous);
      if (it != counts.end() && it->second == top) {
        winner = *previous;
        found = true;
      }
    }
    if (!found) {
      for (const auto& [c, n] : counts) {  // ascending ordinal
        if (n == top) {
          winner = c;
          break;
        }
      }
    }
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(start), out.begin() + static_cast<std::ptrdiff_t>(end), winner);
    previous = winner;
  }
  return out;
}

std::string_view to_string(Branch branch) {
  switch (branch) {
    case Branch::Knn: return "knn";
    case Branch::BothMissing: return "both_missing";
    case Branch::Test: return "test";
  }
  return "unknown";
}

}  // namespace ordinal
