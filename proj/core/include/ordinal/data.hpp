#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ordinal/label_space.hpp"
#include "ordinal/types.hpp"

namespace ordinal {

/// AR(1) generator with class-dependent means along one fixed direction u:
///   v_t = mu_c + phi (v_{t-1} - mu_c) + eps_t,  eps_t ~ N(0, noise_std^2),
///   mu_c = o_c * class_separation * u.
/// The stream is laid out as label-constant runs of `run_length` segments
/// (0 means one run per class) in a seeded order; source_index is the
/// position in that stream.
struct SyntheticConfig {
  int n_classes = 10;
  int n_channels = 4;
  int segment_length = 10;
  int segments_per_class = 200;
  double class_separation = 1.0;
  double ar_coefficient = 0.5;
  double noise_std = 1.0;
  int run_length = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Classes are "c1".."cK" with ordinals 1..K, matching LabelSpace::numbered.
[[nodiscard]] std::vector<Segment> generate(const SyntheticConfig& cfg);

/// The unit direction u used by generate() for a given config.
[[nodiscard]] Vector synthetic_direction(const SyntheticConfig& cfg);

struct StreamSpec {
  std::string label_column = "label";
  std::vector<std::string> feature_columns;  // empty: every column except the label
  int window_length = 10;
  int stride = 0;                            // 0: stride = window_length

  void validate() const;
  [[nodiscard]] int effective_stride() const { return stride > 0 ? stride : window_length; }
};

/// Reads a comma-delimited file with a header row, splits it into
/// label-constant runs and windows each run. Windows never span a label
/// change. source_index is the row (0-based, excluding the header) where the
/// window starts.
[[nodiscard]] std::vector<Segment> ingest_csv(const std::filesystem::path& path, const StreamSpec& spec,
                                              const LabelSpace& space);

/// Writes segments in source_index order, one row per time step, in the same
/// schema ingest_csv reads: a label column followed by ch0..ch{C-1}.
void write_csv(const std::filesystem::path& path, std::span<const Segment> segments, const LabelSpace& space,
               const std::string& label_column = "label");

struct HoldoutSplit {
  std::vector<Segment> train;
  std::vector<Segment> test;  // sorted by source_index
};

/// Stratified split: round(test_fraction * count) segments per class go to
/// test, plus every segment of a missing class.
[[nodiscard]] HoldoutSplit split_holdout(std::span<const Segment> segments, double test_fraction,
                                         const std::vector<ClassIndex>& missing, std::uint64_t seed);

}  // namespace ordinal
