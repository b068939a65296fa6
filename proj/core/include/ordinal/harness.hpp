#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ordinal/encoder.hpp"
#include "ordinal/retrieval.hpp"
#include "ordinal/trainer.hpp"

namespace ordinal {

enum class Protocol { Nonconsecutive, Consecutive };

enum class Method {
  OursOQ,                // ordinal-quadruplet encoder + rank retrieval + test
  TripletInterpolation,  // triplet encoder + interpolated centroids
  TripletWithTest,       // triplet encoder + rank retrieval + test
};

struct ExperimentSpec {
  Protocol protocol = Protocol::Nonconsecutive;
  int n_missing = 2;
  int n_repeats = 5;
  std::vector<int> window_sizes{0, 10, 30};
  std::vector<Method> methods{Method::OursOQ, Method::TripletInterpolation};
  double alpha = 0.05;
  RankStatKind stat = RankStatKind::KendallTauB;
  /// One seed per repeat. When empty, seeds are derived from base_seed.
  std::vector<std::uint64_t> seeds;
  std::uint64_t base_seed = 0;
  double test_fraction = 0.2;
  /// Explicit missing sets per repeat; when empty they are sampled per protocol.
  std::vector<std::vector<ClassIndex>> fixed_missing;
  EncoderConfig encoder;
  TrainConfig train;

  void validate(std::size_t domain_size) const;
  [[nodiscard]] std::uint64_t repeat_seed(int repeat) const;
};

/// Nonconsecutive: no two missing classes adjacent in the domain order.
/// Consecutive: one run of adjacent classes. Uniform over admissible sets.
[[nodiscard]] std::vector<ClassIndex> sample_missing_set(Protocol protocol, int n_missing,
                                                         std::size_t domain_size, std::mt19937_64& rng);

enum class Predictor { RankTest, Interpolation };

struct StreamPrediction {
  std::vector<ClassIndex> labels;
  std::vector<PredictionTrace> traces;  // filled for RankTest only
};

/// Predicts every segment of `test` in the given order.
[[nodiscard]] StreamPrediction predict_stream(const EmbeddingModel& model, const EmbeddingStore& store,
                                              std::span<const Segment> test, const LabelSpace& space,
                                              Predictor predictor, const ClassifyOptions& options = {});

struct Scores {
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted], domain order
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t missing_total = 0;
  std::size_t missing_correct = 0;

  [[nodiscard]] double overall_accuracy() const;
  [[nodiscard]] double missing_accuracy() const;  // 0 when no missing-class samples
};

[[nodiscard]] Scores score(std::span<const ClassIndex> truth, std::span<const ClassIndex> predicted,
                           const LabelSpace& space);

/// Pairwise squared distances between present-class centroids (ascending class order).
[[nodiscard]] Matrix centroid_distances(const EmbeddingStore& store);

/// Spearman correlation between the upper triangles of the centroid distance
/// matrix and the D_y matrix over present classes.
[[nodiscard]] double order_preservation(const EmbeddingStore& store, const LabelSpace& space);

struct WindowResult {
  int window = 0;
  Scores scores;
};

struct RepeatResult {
  Method method = Method::OursOQ;
  int repeat = 0;
  std::uint64_t seed = 0;
  std::vector<ClassIndex> missing;
  std::vector<WindowResult> windows;
  Matrix centroid_distances;
  double order_preservation = 0.0;
  double final_train_loss = 0.0;
};

struct Interval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

struct Aggregate {
  Method method = Method::OursOQ;
  int window = 0;
  Interval missing_accuracy;
  Interval overall_accuracy;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<std::string> class_ids;  // domain order
  std::vector<RepeatResult> runs;      // repeat-major, then spec.methods order
  std::vector<Aggregate> aggregates;
  bool beyond_studied_range = false;   // n_missing > 0.4 |S|

  [[nodiscard]] const RepeatResult& run(Method method, int repeat) const;
  [[nodiscard]] const Aggregate& aggregate(Method method, int window) const;
};

/// mean ± 1.96 standard errors.
[[nodiscard]] Interval normal_interval(std::span<const double> values);

using ProgressCallback = std::function<void(const std::string&)>;

/// Runs every repeat: sample a missing set, split, train one encoder per loss
/// kind needed by spec.methods, build the store, predict the test stream in
/// source order, correct per window size and score. `space` is the full
/// domain; its own missing set is ignored.
[[nodiscard]] ExperimentReport run_experiment(const ExperimentSpec& spec, std::span<const Segment> dataset,
                                              const LabelSpace& space, const ProgressCallback& progress = {});

/// summary.json, repeats.csv, confusion_<method>_r<k>_w<w>.csv and
/// distances_<method>_r<k>.csv. Deterministic: reruns are byte-identical.
void emit_reports(const ExperimentReport& report, const std::filesystem::path& out_dir);

[[nodiscard]] std::string_view to_string(Protocol protocol);
[[nodiscard]] Protocol protocol_from_string(std::string_view name);
[[nodiscard]] std::string_view to_string(Method method);
[[nodiscard]] Method method_from_string(std::string_view name);
[[nodiscard]] LossKind loss_for(Method method);

}  // namespace ordinal
