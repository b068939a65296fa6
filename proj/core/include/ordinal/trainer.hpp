#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "ordinal/encoder.hpp"
#include "ordinal/objective.hpp"

namespace ordinal {

enum class LossKind { OrdinalQuadruplet, TripletOnly };
enum class OptimizerKind { SGD, Adam };

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int batch_size = 256;
  double learning_rate = 0.005;
  int epochs = 30;
  LossKind loss_kind = LossKind::OrdinalQuadruplet;
  OptimizerKind optimizer = OptimizerKind::Adam;
  AdamConfig adam;
  std::uint64_t seed = 0;
  LossConfig loss_cfg;
  std::size_t max_per_anchor = 8;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  std::size_t batches = 0;
  std::size_t quadruplets = 0;
  std::size_t triplets = 0;          // TripletOnly terms plus degraded terms
  std::size_t degraded_batches = 0;  // batches where some anchor fell back to triplets
  std::size_t empty_batches = 0;     // single-label batches, no step taken
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
};

/// Plain SGD or Adam over a flat parameter vector. Single writer.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, AdamConfig adam = {});

  void step(Vector& params, const Vector& grad);

 private:
  OptimizerKind kind_;
  double lr_;
  AdamConfig adam_;
  Vector m_, v_;
  std::int64_t t_ = 0;
};

/// Loss of one batch under a fixed sample, and its gradient with respect to
/// the encoder parameters.
struct BatchObjective {
  double loss = 0.0;
  std::size_t terms = 0;
  Vector grad;
};

/// How a batch's terms were drawn. For TripletOnly only `triplets` is used.
struct BatchSample {
  QuadrupletSample quadruplets;
  std::vector<Triplet> triplets;
};

[[nodiscard]] BatchSample sample_batch(std::span<const ClassIndex> labels, LossKind kind,
                                       std::mt19937_64& rng, std::size_t max_per_anchor);

[[nodiscard]] BatchObjective evaluate_batch(const EmbeddingModel& model,
                                            std::span<const Segment* const> batch,
                                            const BatchSample& sample, LossKind kind,
                                            const LossConfig& cfg, const LabelSpace& space);

struct TrainResult {
  EmbeddingModel model;
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Seeded mini-batch training. Batches are class-stratified: each epoch the
/// per-class index lists are shuffled and interleaved round-robin before
/// being cut into batches. Throws if any segment is labeled with a missing class.
[[nodiscard]] TrainResult train(EmbeddingModel model, std::span<const Segment> data,
                                const TrainConfig& cfg, const LabelSpace& space,
                                const EpochCallback& on_epoch = {});

/// Max relative error between the analytic batch gradient and central finite
/// differences (step 1e-5) over every parameter. One batch of up to
/// cfg.batch_size segments taken round-robin over classes, sampled with
/// cfg.seed. Throws if the batch yields no loss terms.
[[nodiscard]] double grad_check(const EmbeddingModel& model, std::span<const Segment> data,
                                const TrainConfig& cfg, const LabelSpace& space);

/// |a - n| / max(|a|, |n|, floor). The floor keeps near-zero components from
/// turning rounding noise into a large relative error.
[[nodiscard]] double relative_error(double analytic, double numeric, double floor = 1e-6);

[[nodiscard]] std::string_view to_string(LossKind kind);
[[nodiscard]] LossKind loss_kind_from_string(std::string_view name);
[[nodiscard]] std::string_view to_string(OptimizerKind kind);
[[nodiscard]] OptimizerKind optimizer_from_string(std::string_view name);

}  // namespace ordinal
