#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ordinal/encoder.hpp"
#include "ordinal/label_space.hpp"
#include "ordinal/stats.hpp"
#include "ordinal/types.hpp"

namespace ordinal {

/// Training embeddings grouped by present class, with centroids f̄_c (plain
/// means, not renormalized) and distance populations d_c = {D(f(x), f̄_c)}.
/// Indexed by ClassIndex over the whole domain; missing classes have no entry.
class EmbeddingStore {
 public:
  EmbeddingStore(const LabelSpace& space, std::span<const FeatureVector> features,
                 std::span<const ClassIndex> labels);

  [[nodiscard]] const std::vector<ClassIndex>& classes() const noexcept { return classes_; }
  [[nodiscard]] std::size_t domain_size() const noexcept { return members_.size(); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return dim_; }
  [[nodiscard]] bool has(ClassIndex c) const { return c < members_.size() && !members_[c].empty(); }

  [[nodiscard]] const Vector& centroid(ClassIndex c) const;
  [[nodiscard]] std::span<const double> population(ClassIndex c) const;
  [[nodiscard]] std::span<const Vector> members(ClassIndex c) const;

 private:
  std::vector<ClassIndex> classes_;
  std::vector<std::vector<Vector>> members_;
  std::vector<Vector> centroids_;
  std::vector<std::vector<double>> populations_;
  Eigen::Index dim_ = 0;
};

/// Embeds every segment and builds the store. Labels must all be present classes.
[[nodiscard]] EmbeddingStore build_store(const EmbeddingModel& model, std::span<const Segment> segments,
                                         const LabelSpace& space);

/// L[s][n] = D_y(s, n) for s in S (rows) and n in N (columns, ascending).
class LabelRankMatrix {
 public:
  explicit LabelRankMatrix(const LabelSpace& space);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::span<const double> row(ClassIndex s) const;
  [[nodiscard]] const std::vector<ClassIndex>& columns() const noexcept { return columns_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<ClassIndex> columns_;
  std::vector<double> values_;
};

/// k = 1: nearest centroid. k > 1: majority vote over the k nearest training
/// embeddings. Ties go to the smaller mean distance, then the lower ordinal.
[[nodiscard]] ClassIndex knn_predict(const EmbeddingStore& store, const Vector& f_te, int k = 1);

enum class Branch { Knn, BothMissing, Test };

struct PredictionTrace {
  std::vector<double> feature_distances;  // F, one entry per present class (ascending)
  std::vector<double> scores;             // rank statistic per domain class
  ClassIndex first = 0;                   // s1
  ClassIndex second = 0;                  // s2
  Branch branch = Branch::Knn;
  std::optional<Decision> decision;
  std::optional<double> d_te;
  std::optional<double> threshold;
  ClassIndex label = 0;
  bool score_tie = false;     // top-2 selection needed the tie-break
  bool degenerate = false;    // all entries of F were equal
};

struct ClassifyOptions {
  RankStatKind stat = RankStatKind::KendallTauB;
  TestConfig test;
  int k = 1;
};

/// Rank-based classification with missing classes.
///
/// Scores every domain class by the rank correlation between F and its row of
/// L, takes the two best (s1, s2), then: both present -> k-nn; both missing ->
/// s1; otherwise the quantile test against the present candidate decides.
///
/// When F is constant the correlation is undefined; rows of L that are also
/// constant are then exact rank matches and score 1, others 0. With no such
/// row the prediction falls back to k-nn and the trace is flagged.
[[nodiscard]] PredictionTrace classify(const EmbeddingStore& store, const LabelRankMatrix& L,
                                       const Vector& f_te, const LabelSpace& space,
                                       const ClassifyOptions& options = {});

/// Centroids over the whole domain: present classes keep theirs, each missing
/// class is placed between its nearest present neighbours with weights set by
/// the D_y gaps, or extrapolated from the two nearest present classes on its
/// only side.
[[nodiscard]] std::vector<Vector> interpolate_missing(const EmbeddingStore& store, const LabelSpace& space);

/// Nearest centroid over the whole domain; ties go to the lower ordinal.
[[nodiscard]] ClassIndex baseline_predict(std::span<const Vector> centroids, const Vector& f_te);

/// Majority rule over consecutive windows of size w (w = 0 is the identity).
/// A modal tie keeps the previous window's corrected label when it is among
/// the tied classes, otherwise takes the lowest ordinal.
[[nodiscard]] std::vector<ClassIndex> window_correct(std::span<const ClassIndex> predictions, std::size_t w);

[[nodiscard]] std::string_view to_string(Branch branch);

}  // namespace ordinal
