#include "ordinal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ordinal/error.hpp"

namespace ordinal {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error("rank statistic inputs differ in length (" + std::to_string(x.size()) + " vs " +
                std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw Error("rank statistic needs at least two observations");
}

// Sum of t(t-1)/2 over runs of equal values in an already sorted sequence.
template <typename Equal>
std::int64_t tied_pairs(std::size_t n, Equal equal) {
  std::int64_t total = 0;
  std::int64_t run = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k < n && equal(k - 1, k)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

// Stable merge sort that returns the number of strict inversions.
std::int64_t sort_counting_inversions(std::vector<double>& v, std::vector<double>& buf,
                                      std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = sort_counting_inversions(v, buf, lo, mid) + sort_counting_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

// Average ranks scaled by two so every rank is an integer.
std::vector<double> doubled_average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && v[order[end]] == v[order[start]]) ++end;
    // positions start..end-1 (0-based) share rank ((start+1) + end) / 2
    const auto doubled = static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) ranks[order[k]] = doubled;
    start = end;
  }
  return ranks;
}

}  // namespace

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const auto n1 = tied_pairs(n, [&](auto a, auto b) { return x[order[a]] == x[order[b]]; });
  const auto n3 = tied_pairs(n, [&](auto a, auto b) {
    return x[order[a]] == x[order[b]] && y[order[a]] == y[order[b]];
  });

  std::vector<double> ys(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = y[order[k]];
  std::vector<double> buf(n);
  const auto swaps = sort_counting_inversions(ys, buf, 0, n);
  const auto n2 = tied_pairs(n, [&](auto a, auto b) { return ys[a] == ys[b]; });

  const std::int64_t not_tied_x = n0 - n1;  // P + Q + T_y
  const std::int64_t not_tied_y = n0 - n2;  // P + Q + T_x
  if (not_tied_x == 0 || not_tied_y == 0) return 0.0;
  const std::int64_t concordant_minus_discordant = n0 - n1 - n2 + n3 - 2 * swaps;
  return static_cast<double>(concordant_minus_discordant) /
         std::sqrt(static_cast<double>(not_tied_y) * static_cast<double>(not_tied_x));
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto rx = doubled_average_ranks(x);
  const auto ry = doubled_average_ranks(y);
  // Doubled ranks centred on n + 1 are integers, so every sum below is exact.
  const auto centre = static_cast<double>(x.size() + 1);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    const double cx = rx[k] - centre;
    const double cy = ry[k] - centre;
    sxy += cx * cy;
    sxx += cx * cx;
    syy += cy * cy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double rank_statistic(RankStatKind kind, std::span<const double> x, std::span<const double> y) {
  return kind == RankStatKind::KendallTauB ? kendall_tau_b(x, y) : spearman_rho(x, y);
}

double quantile(std::span<const double> d, double p) {
  if (d.empty()) throw Error("quantile of an empty set");
  if (!(p > 0.0) || p > 1.0) throw Error("quantile level must lie in (0, 1]");
  const auto n = static_cast<double>(d.size());
  // Products like 0.07 * 100 land a hair above the integer; do not let that bump the rank.
  const double raw = p * n;
  const double rank = std::max(1.0, std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  const auto k = static_cast<std::size_t>(rank) - 1;
  std::vector<double> sorted(d.begin(), d.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  return sorted[k];
}

void TestConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("test alpha must lie in (0, 1)");
}

TestOutcome missing_class_test(double d_te, std::span<const double> population, const TestConfig& cfg) {
  cfg.validate();
  if (population.empty()) throw Error("missing-class test needs a non-empty distance population");
  TestOutcome out;
  out.threshold = quantile(population, 1.0 - cfg.alpha);
  out.decision = d_te > out.threshold ? Decision::RejectToMissing : Decision::RetainNonMissing;
  return out;
}

std::string_view to_string(RankStatKind kind) {
  return kind == RankStatKind::KendallTauB ? "kendall_tau_b" : "spearman_rho";
}

RankStatKind rank_stat_from_string(std::string_view name) {
  if (name == "kendall_tau_b" || name == "kendall") return RankStatKind::KendallTauB;
  if (name == "spearman_rho" || name == "spearman") return RankStatKind::SpearmanRho;
  throw Error("unknown rank statistic '" + std::string(name) + "'");
}

std::string_view to_string(Decision decision) {
  return decision == Decision::RejectToMissing ? "reject_to_missing" : "retain_non_missing";
}

}  // namespace ordinal
