#include "ordinal/objective.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "ordinal/error.hpp"

namespace ordinal {

void LossConfig::validate() const {
  if (!(margin >= 0.0)) throw Error("triplet margin must be >= 0");
  if (!(epsilon_d > 0.0)) throw Error("distance floor epsilon_d must be > 0");
}

double triplet_loss(double d_ap, double d_an, double margin) {
  return std::max(d_ap - d_an + margin, 0.0);
}

namespace {

double log_ratio_residual(double d_ai, double d_aj, double dy_ai, double dy_aj, double epsilon_d) {
  if (!(dy_ai > 0.0) || !(dy_aj > 0.0)) {
    throw Error("log-ratio loss needs positive label distances (got " + std::to_string(dy_ai) + ", " +
                std::to_string(dy_aj) + ")");
  }
  return std::log(std::max(d_ai, epsilon_d)) - std::log(std::max(d_aj, epsilon_d)) -
         (std::log(dy_ai) - std::log(dy_aj));
}

}  // namespace

double log_ratio_loss(double d_ai, double d_aj, double dy_ai, double dy_aj, double epsilon_d) {
  const double r = log_ratio_residual(d_ai, d_aj, dy_ai, dy_aj, epsilon_d);
  return r * r;
}

TupleLoss quadruplet_loss(std::span<const Vector> embeddings, std::span<const ClassIndex> labels,
                          const Quadruplet& q, const LossConfig& cfg, const LabelSpace& space) {
  const auto n = embeddings.size();
  if (labels.size() != n) throw Error("labels and embeddings differ in length");
  if (q.anchor >= n || q.positive >= n || q.neg_i >= n || q.neg_j >= n) {
    throw Error("quadruplet index out of range");
  }
  const auto ya = labels[q.anchor];
  if (labels[q.positive] != ya || labels[q.neg_i] == ya || labels[q.neg_j] == ya ||
      labels[q.neg_i] == labels[q.neg_j] || q.anchor == q.positive) {
    throw Error("quadruplet violates its label constraints");
  }

  const Vector& a = embeddings[q.anchor];
  const Vector& s = embeddings[q.positive];
  const Vector& i = embeddings[q.neg_i];
  const Vector& j = embeddings[q.neg_j];
  const Vector as = a - s;
  const Vector ai = a - i;
  const Vector aj = a - j;
  const double d_as = as.squaredNorm();
  const double d_ai = ai.squaredNorm();
  const double d_aj = aj.squaredNorm();

  // Partial derivatives of L with respect to the three distances.
  double g_as = 0.0, g_ai = 0.0, g_aj = 0.0;
  double loss = 0.0;
  const double hinge_i = d_as - d_ai + cfg.margin;
  if (hinge_i > 0.0) {
    loss += hinge_i;
    g_as += 1.0;
    g_ai -= 1.0;
  }
  const double hinge_j = d_as - d_aj + cfg.margin;
  if (hinge_j > 0.0) {
    loss += hinge_j;
    g_as += 1.0;
    g_aj -= 1.0;
  }
  const double r = log_ratio_residual(d_ai, d_aj, space.distance(ya, labels[q.neg_i]),
                                      space.distance(ya, labels[q.neg_j]), cfg.epsilon_d);
  loss += r * r;
  if (d_ai > cfg.epsilon_d) g_ai += 2.0 * r / d_ai;
  if (d_aj > cfg.epsilon_d) g_aj -= 2.0 * r / d_aj;

  TupleLoss out;
  out.loss = loss;
  out.grad_anchor = 2.0 * (g_as * as + g_ai * ai + g_aj * aj);
  out.grad_positive = -2.0 * g_as * as;
  out.grad_i = -2.0 * g_ai * ai;
  out.grad_j = -2.0 * g_aj * aj;
  return out;
}

TupleLoss triplet_term(std::span<const Vector> embeddings, const Triplet& t, const LossConfig& cfg) {
  const auto n = embeddings.size();
  if (t.anchor >= n || t.positive >= n || t.negative >= n) throw Error("triplet index out of range");
  const Vector ap = embeddings[t.anchor] - embeddings[t.positive];
  const Vector an = embeddings[t.anchor] - embeddings[t.negative];
  const double hinge = ap.squaredNorm() - an.squaredNorm() + cfg.margin;

  TupleLoss out;
  const auto dim = ap.size();
  if (hinge > 0.0) {
    out.loss = hinge;
    out.grad_anchor = 2.0 * (ap - an);
    out.grad_positive = -2.0 * ap;
    out.grad_i = 2.0 * an;
  } else {
    out.grad_anchor = Vector::Zero(dim);
    out.grad_positive = Vector::Zero(dim);
    out.grad_i = Vector::Zero(dim);
  }
  return out;
}

namespace {

struct AnchorPools {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  std::size_t negative_pairs = 0;  // unordered negative pairs with distinct labels
};

AnchorPools pools_for(std::span<const ClassIndex> labels, std::size_t a) {
  AnchorPools p;
  std::vector<std::size_t> per_label;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (k == a) continue;
    if (labels[k] == labels[a]) {
      p.positives.push_back(k);
    } else {
      p.negatives.push_back(k);
      if (labels[k] >= per_label.size()) per_label.resize(labels[k] + 1, 0);
      ++per_label[labels[k]];
    }
  }
  const auto nn = p.negatives.size();
  std::size_t same = 0;
  for (auto c : per_label) same += c * (c - (c > 0 ? 1 : 0)) / 2;
  p.negative_pairs = nn * (nn - (nn > 0 ? 1 : 0)) / 2 - same;
  return p;
}

// Draws k distinct items from a candidate space of `total` items. Small spaces
// are enumerated and partially shuffled; large ones use rejection with dedup.
template <typename Tuple, typename Enumerate, typename Draw>
std::vector<Tuple> draw_distinct(std::size_t total, std::size_t k, std::mt19937_64& rng,
                                 Enumerate enumerate, Draw draw) {
  std::vector<Tuple> out;
  if (total == 0 || k == 0) return out;
  if (total <= 4 * k) {
    std::vector<Tuple> all = enumerate();
    const auto take = std::min(k, all.size());
    for (std::size_t m = 0; m < take; ++m) {
      std::uniform_int_distribution<std::size_t> pick(m, all.size() - 1);
      std::swap(all[m], all[pick(rng)]);
    }
    all.resize(take);
    return all;
  }
  std::set<Tuple> seen;
  while (out.size() < k) {
    auto t = draw();
    if (seen.insert(t).second) out.push_back(t);
  }
  return out;
}

std::vector<Triplet> draw_triplets(std::size_t a, const AnchorPools& p, std::mt19937_64& rng,
                                   std::size_t k) {
  using T = std::tuple<std::size_t, std::size_t>;
  const auto picks = draw_distinct<T>(
      p.positives.size() * p.negatives.size(), k, rng,
      [&] {
        std::vector<T> all;
        for (auto s : p.positives)
          for (auto n : p.negatives) all.emplace_back(s, n);
        return all;
      },
      [&] {
        std::uniform_int_distribution<std::size_t> ps(0, p.positives.size() - 1);
        std::uniform_int_distribution<std::size_t> ns(0, p.negatives.size() - 1);
        const auto s = p.positives[ps(rng)];
        return T{s, p.negatives[ns(rng)]};
      });
  std::vector<Triplet> out;
  out.reserve(picks.size());
  for (const auto& [s, n] : picks) out.push_back({a, s, n});
  return out;
}

}  // namespace

QuadrupletSample sample_quadruplets(std::span<const ClassIndex> labels, std::mt19937_64& rng,
                                    std::size_t max_per_anchor) {
  if (labels.empty()) throw Error("cannot sample quadruplets from an empty batch");
  QuadrupletSample out;
  out.single_label = std::all_of(labels.begin(), labels.end(), [&](auto c) { return c == labels[0]; });
  if (out.single_label) return out;

  using T = std::tuple<std::size_t, std::size_t, std::size_t>;
  for (std::size_t a = 0; a < labels.size(); ++a) {
    const auto p = pools_for(labels, a);
    if (p.positives.empty() || p.negatives.empty()) continue;
    if (p.negative_pairs == 0) {
      auto t = draw_triplets(a, p, rng, max_per_anchor);
      out.degraded.insert(out.degraded.end(), t.begin(), t.end());
      ++out.degraded_anchors;
      continue;
    }
    const auto picks = draw_distinct<T>(
        p.positives.size() * p.negative_pairs, max_per_anchor, rng,
        [&] {
          std::vector<T> all;
          for (auto s : p.positives)
            for (std::size_t x = 0; x < p.negatives.size(); ++x)
              for (std::size_t y = x + 1; y < p.negatives.size(); ++y) {
                const auto i = p.negatives[x];
                const auto j = p.negatives[y];
                if (labels[i] != labels[j]) all.emplace_back(s, i, j);
              }
          return all;
        },
        [&] {
          std::uniform_int_distribution<std::size_t> ps(0, p.positives.size() - 1);
          std::uniform_int_distribution<std::size_t> ns(0, p.negatives.size() - 1);
          const auto s = p.positives[ps(rng)];
          for (;;) {
            const auto i = p.negatives[ns(rng)];
            const auto j = p.negatives[ns(rng)];
            if (labels[i] != labels[j]) return T{s, std::min(i, j), std::max(i, j)};
          }
        });
    for (const auto& [s, i, j] : picks) out.quadruplets.push_back({a, s, i, j});
  }
  return out;
}

std::vector<Triplet> sample_triplets(std::span<const ClassIndex> labels, std::mt19937_64& rng,
                                     std::size_t max_per_anchor) {
  if (labels.empty()) throw Error("cannot sample triplets from an empty batch");
  std::vector<Triplet> out;
  for (std::size_t a = 0; a < labels.size(); ++a) {
    const auto p = pools_for(labels, a);
    if (p.positives.empty() || p.negatives.empty()) continue;
    auto t = draw_triplets(a, p, rng, max_per_anchor);
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

namespace {

std::vector<Vector> zero_grads(std::span<const Vector> embeddings) {
  std::vector<Vector> g;
  g.reserve(embeddings.size());
  for (const auto& e : embeddings) g.push_back(Vector::Zero(e.size()));
  return g;
}

void add_triplet(BatchLoss& out, std::span<const Vector> embeddings, const Triplet& t,
                 const LossConfig& cfg) {
  const auto term = triplet_term(embeddings, t, cfg);
  out.loss += term.loss;
  out.grads[t.anchor] += term.grad_anchor;
  out.grads[t.positive] += term.grad_positive;
  out.grads[t.negative] += term.grad_i;
  ++out.terms;
}

void finish_mean(BatchLoss& out) {
  if (out.terms == 0) return;
  const double scale = 1.0 / static_cast<double>(out.terms);
  out.loss *= scale;
  for (auto& g : out.grads) g *= scale;
}

}  // namespace

BatchLoss batch_loss(std::span<const Vector> embeddings, std::span<const ClassIndex> labels,
                     const QuadrupletSample& sample, const LossConfig& cfg, const LabelSpace& space) {
  BatchLoss out;
  out.grads = zero_grads(embeddings);
  for (const auto& q : sample.quadruplets) {
    const auto term = quadruplet_loss(embeddings, labels, q, cfg, space);
    out.loss += term.loss;
    out.grads[q.anchor] += term.grad_anchor;
    out.grads[q.positive] += term.grad_positive;
    out.grads[q.neg_i] += term.grad_i;
    out.grads[q.neg_j] += term.grad_j;
    ++out.terms;
  }
  for (const auto& t : sample.degraded) add_triplet(out, embeddings, t, cfg);
  finish_mean(out);
  return out;
}

BatchLoss batch_loss(std::span<const Vector> embeddings, std::span<const Triplet> triplets,
                     const LossConfig& cfg) {
  BatchLoss out;
  out.grads = zero_grads(embeddings);
  for (const auto& t : triplets) add_triplet(out, embeddings, t, cfg);
  finish_mean(out);
  return out;
}

}  // namespace ordinal
