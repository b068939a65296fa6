#pragma once

#include <span>
#include <string_view>

namespace ordinal {

enum class RankStatKind { KendallTauB, SpearmanRho };

/// Tie-aware Kendall correlation:
///   (P - Q) / sqrt((P + Q + T_x) (P + Q + T_y))
/// where T_x counts pairs tied in x only and T_y pairs tied in y only.
/// Returns 0 when either factor of the denominator is zero. O(n log n).
[[nodiscard]] double kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks; 0 when either rank vector is constant.
[[nodiscard]] double spearman_rho(std::span<const double> x, std::span<const double> y);

[[nodiscard]] double rank_statistic(RankStatKind kind, std::span<const double> x,
                                    std::span<const double> y);

/// Nearest-rank sample quantile: the ceil(p n)-th smallest element (1-based).
[[nodiscard]] double quantile(std::span<const double> d, double p);

struct TestConfig {
  double alpha = 0.05;

  void validate() const;
};

enum class Decision { RetainNonMissing, RejectToMissing };

struct TestOutcome {
  Decision decision = Decision::RetainNonMissing;
  double threshold = 0.0;  // Q(1 - alpha, population)
};

/// Reject "x_te belongs to the present class" iff d_te > Q(1 - alpha, population).
[[nodiscard]] TestOutcome missing_class_test(double d_te, std::span<const double> population,
                                             const TestConfig& cfg);

[[nodiscard]] std::string_view to_string(RankStatKind kind);
[[nodiscard]] RankStatKind rank_stat_from_string(std::string_view name);
[[nodiscard]] std::string_view to_string(Decision decision);

}  // namespace ordinal
