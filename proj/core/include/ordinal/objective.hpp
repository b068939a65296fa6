#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "ordinal/label_space.hpp"
#include "ordinal/types.hpp"

namespace ordinal {

struct LossConfig {
  double margin = 0.2;       // δ in the triplet hinge
  double epsilon_d = 1e-8;   // floor on feature distances before the log-ratio

  void validate() const;
};

/// Indices into a batch: anchor and positive share a label, the two
/// negatives carry two further labels distinct from each other.
struct Quadruplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t neg_i = 0;
  std::size_t neg_j = 0;

  friend bool operator==(const Quadruplet&, const Quadruplet&) = default;
};

struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// [D_ap - D_an + δ]_+
[[nodiscard]] double triplet_loss(double d_ap, double d_an, double margin);

/// (log(D_ai / D_aj) - log(Dy_ai / Dy_aj))^2 with feature distances floored at epsilon_d.
[[nodiscard]] double log_ratio_loss(double d_ai, double d_aj, double dy_ai, double dy_aj,
                                    double epsilon_d = LossConfig{}.epsilon_d);

/// Loss value and its gradient with respect to each participating feature vector.
struct TupleLoss {
  double loss = 0.0;
  Vector grad_anchor;
  Vector grad_positive;
  Vector grad_i;  // first negative (the only negative for a triplet)
  Vector grad_j;  // second negative; empty for a triplet
};

/// L = l_t(a,s,i) + l_t(a,s,j) + l_lr(a,i,j). The hinge subgradient at the kink is 0.
[[nodiscard]] TupleLoss quadruplet_loss(std::span<const Vector> embeddings,
                                        std::span<const ClassIndex> labels, const Quadruplet& q,
                                        const LossConfig& cfg, const LabelSpace& space);

/// l_t(a,p,n) on its own.
[[nodiscard]] TupleLoss triplet_term(std::span<const Vector> embeddings, const Triplet& t,
                                     const LossConfig& cfg);

struct QuadrupletSample {
  std::vector<Quadruplet> quadruplets;
  /// Triplet terms for anchors that have a positive and a negative but
  /// fewer than two distinct negative labels in the batch.
  std::vector<Triplet> degraded;
  std::size_t degraded_anchors = 0;
  /// The batch held a single label: nothing could be sampled.
  bool single_label = false;

  [[nodiscard]] bool empty() const noexcept { return quadruplets.empty() && degraded.empty(); }
};

/// Per anchor, up to max_per_anchor distinct (positive, {neg_i, neg_j}) draws,
/// uniformly without replacement. Negatives are emitted with neg_i < neg_j.
[[nodiscard]] QuadrupletSample sample_quadruplets(std::span<const ClassIndex> labels,
                                                  std::mt19937_64& rng, std::size_t max_per_anchor);

/// Per anchor, up to max_per_anchor distinct (positive, negative) draws.
[[nodiscard]] std::vector<Triplet> sample_triplets(std::span<const ClassIndex> labels,
                                                   std::mt19937_64& rng, std::size_t max_per_anchor);

/// Mean loss over all sampled terms and d(mean loss)/d(embedding) for every batch member.
struct BatchLoss {
  double loss = 0.0;
  std::size_t terms = 0;
  std::vector<Vector> grads;
};

/// Sums quadruplet terms, then degraded triplet terms, in index order.
[[nodiscard]] BatchLoss batch_loss(std::span<const Vector> embeddings,
                                   std::span<const ClassIndex> labels,
                                   const QuadrupletSample& sample, const LossConfig& cfg,
                                   const LabelSpace& space);

[[nodiscard]] BatchLoss batch_loss(std::span<const Vector> embeddings,
                                   std::span<const Triplet> triplets, const LossConfig& cfg);

}  // namespace ordinal
