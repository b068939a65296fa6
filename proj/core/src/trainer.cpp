#include "ordinal/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <string>

#include "ordinal/error.hpp"

namespace ordinal {

void TrainConfig::validate() const {
  if (batch_size < 2) throw Error("batch_size must be >= 2");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be > 0");
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (max_per_anchor < 1) throw Error("max_per_anchor must be >= 1");
  loss_cfg.validate();
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, AdamConfig adam)
    : kind_(kind), lr_(learning_rate), adam_(adam) {
  if (!(learning_rate >= 0.0)) throw Error("learning rate must be >= 0");
}

void Optimizer::step(Vector& params, const Vector& grad) {
  if (params.size() != grad.size()) throw Error("gradient and parameter sizes differ");
  if (kind_ == OptimizerKind::SGD) {
    params -= lr_ * grad;
    return;
  }
  if (m_.size() != params.size()) {
    m_ = Vector::Zero(params.size());
    v_ = Vector::Zero(params.size());
  }
  ++t_;
  m_ = adam_.beta1 * m_ + (1.0 - adam_.beta1) * grad;
  v_ = adam_.beta2 * v_ + (1.0 - adam_.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + adam_.epsilon);
}

BatchSample sample_batch(std::span<const ClassIndex> labels, LossKind kind, std::mt19937_64& rng,
                         std::size_t max_per_anchor) {
  BatchSample s;
  if (kind == LossKind::OrdinalQuadruplet) {
    s.quadruplets = sample_quadruplets(labels, rng, max_per_anchor);
  } else {
    s.triplets = sample_triplets(labels, rng, max_per_anchor);
  }
  return s;
}

BatchObjective evaluate_batch(const EmbeddingModel& model, std::span<const Segment* const> batch,
                              const BatchSample& sample, LossKind kind, const LossConfig& cfg,
                              const LabelSpace& space) {
  std::vector<Vector> embeddings;
  std::vector<ClassIndex> labels;
  embeddings.reserve(batch.size());
  labels.reserve(batch.size());
  for (const auto* seg : batch) {
    embeddings.push_back(forward(model, *seg).values());
    labels.push_back(seg->class_index());
  }

  const auto loss = kind == LossKind::OrdinalQuadruplet
                        ? batch_loss(embeddings, labels, sample.quadruplets, cfg, space)
                        : batch_loss(embeddings, sample.triplets, cfg);

  BatchObjective out;
  out.loss = loss.loss;
  out.terms = loss.terms;
  out.grad = Vector::Zero(model.parameters().size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (loss.grads[k].isZero(0.0)) continue;
    out.grad += backward(model, *batch[k], loss.grads[k]);
  }
  return out;
}

namespace {

std::vector<std::vector<const Segment*>> stratified_batches(
    const std::vector<std::vector<const Segment*>>& by_class, int batch_size, std::mt19937_64& rng) {
  auto pools = by_class;
  for (auto& p : pools) std::shuffle(p.begin(), p.end(), rng);
  std::vector<std::size_t> class_order(pools.size());
  for (std::size_t k = 0; k < class_order.size(); ++k) class_order[k] = k;
  std::shuffle(class_order.begin(), class_order.end(), rng);

  std::vector<const Segment*> stream;
  std::size_t longest = 0;
  for (const auto& p : pools) longest = std::max(longest, p.size());
  for (std::size_t round = 0; round < longest; ++round) {
    for (auto c : class_order) {
      if (round < pools[c].size()) stream.push_back(pools[c][round]);
    }
  }

  std::vector<std::vector<const Segment*>> batches;
  const auto b = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < stream.size(); start += b) {
    const auto end = std::min(stream.size(), start + b);
    if (end - start < 2) break;
    batches.emplace_back(stream.begin() + static_cast<std::ptrdiff_t>(start),
                         stream.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

void check_training_labels(std::span<const Segment> data, const LabelSpace& space) {
  if (data.empty()) throw Error("training data is empty");
  check_labels(data, space);
  for (const auto& s : data) {
    if (space.is_missing(s.class_index())) {
      throw Error("segment at source index " + std::to_string(s.source_index()) + " is labeled '" +
                  space.id(s.class_index()) + "', a class marked missing; missing classes must not be trained on");
    }
  }
}

}  // namespace

TrainResult train(EmbeddingModel model, std::span<const Segment> data, const TrainConfig& cfg,
                  const LabelSpace& space, const EpochCallback& on_epoch) {
  cfg.validate();
  check_training_labels(data, space);

  std::vector<std::vector<const Segment*>> by_class(space.size());
  for (const auto& s : data) by_class[s.class_index()].push_back(&s);
  std::erase_if(by_class, [](const auto& v) { return v.empty(); });

  std::mt19937_64 rng(cfg.seed);
  Optimizer opt(cfg.optimizer, cfg.learning_rate, cfg.adam);
  TrainReport report;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochStats stats;
    stats.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t stepped = 0;

    for (const auto& batch : stratified_batches(by_class, cfg.batch_size, rng)) {
      std::vector<ClassIndex> labels;
      labels.reserve(batch.size());
      for (const auto* s : batch) labels.push_back(s->class_index());
      const auto sample = sample_batch(labels, cfg.loss_kind, rng, cfg.max_per_anchor);
      ++stats.batches;
      stats.quadruplets += sample.quadruplets.quadruplets.size();
      stats.triplets += sample.triplets.size() + sample.quadruplets.degraded.size();
      if (sample.quadruplets.degraded_anchors > 0) ++stats.degraded_batches;
      if (sample.quadruplets.empty() && sample.triplets.empty()) {
        ++stats.empty_batches;
        continue;
      }
      const auto obj = evaluate_batch(model, batch, sample, cfg.loss_kind, cfg.loss_cfg, space);
      loss_sum += obj.loss;
      ++stepped;
      opt.step(model.mutable_parameters(), obj.grad);
    }

    stats.mean_loss = stepped > 0 ? loss_sum / static_cast<double>(stepped) : 0.0;
    if (!std::isfinite(stats.mean_loss) || !model.parameters().allFinite()) {
      throw Error("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
    }
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_epoch) on_epoch(stats);
    report.epochs.push_back(stats);
  }
  return {std::move(model), std::move(report)};
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

double grad_check(const EmbeddingModel& model, std::span<const Segment> data, const TrainConfig& cfg,
                  const LabelSpace& space) {
  cfg.validate();
  check_training_labels(data, space);
  const auto n = std::min(data.size(), static_cast<std::size_t>(cfg.batch_size));
  // round-robin over classes in stream order, so a batch cut from one label run still mixes labels
  std::map<ClassIndex, std::vector<const Segment*>> by_class;
  for (const auto& s : data) by_class[s.class_index()].push_back(&s);
  std::vector<const Segment*> batch;
  std::vector<ClassIndex> labels;
  for (std::size_t depth = 0; batch.size() < n; ++depth) {
    for (const auto& [c, members] : by_class) {
      if (depth < members.size() && batch.size() < n) {
        batch.push_back(members[depth]);
        labels.push_back(c);
      }
    }
  }
  std::mt19937_64 rng(cfg.seed);
  const auto sample = sample_batch(labels, cfg.loss_kind, rng, cfg.max_per_anchor);
  if (sample.triplets.empty() && sample.quadruplets.empty()) {
    throw Error("gradient check batch has no loss terms; it needs at least two labels");
  }

  const auto analytic = evaluate_batch(model, batch, sample, cfg.loss_kind, cfg.loss_cfg, space).grad;
  constexpr double kStep = 1e-5;
  EmbeddingModel probe = model;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < analytic.size(); ++k) {
    const double original = probe.parameters()[k];
    probe.mutable_parameters()[k] = original + kStep;
    const double up = evaluate_batch(probe, batch, sample, cfg.loss_kind, cfg.loss_cfg, space).loss;
    probe.mutable_parameters()[k] = original - kStep;
    const double down = evaluate_batch(probe, batch, sample, cfg.loss_kind, cfg.loss_cfg, space).loss;
    probe.mutable_parameters()[k] = original;
    worst = std::max(worst, relative_error(analytic[k], (up - down) / (2.0 * kStep)));
  }
  return worst;
}

std::string_view to_string(LossKind kind) {
  return kind == LossKind::OrdinalQuadruplet ? "ordinal_quadruplet" : "triplet";
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "ordinal_quadruplet" || name == "oq") return LossKind::OrdinalQuadruplet;
  if (name == "triplet" || name == "triplet_only") return LossKind::TripletOnly;
  throw Error("unknown loss kind '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::SGD ? "sgd" : "adam"; }

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::SGD;
  if (name == "adam") return OptimizerKind::Adam;
  throw Error("unknown optimizer '" + std::string(name) + "'");
}

}  // namespace ordinal
