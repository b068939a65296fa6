#include "ordinal/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include "ordinal/error.hpp"

namespace ordinal {

void SyntheticConfig::validate() const {
  if (n_classes < 3) throw Error("synthetic data needs n_classes >= 3");
  if (n_channels < 1 || segment_length < 1 || segments_per_class < 1) {
    throw Error("synthetic dimensions must be >= 1");
  }
  if (!(ar_coefficient >= 0.0 && ar_coefficient < 1.0)) throw Error("ar_coefficient must lie in [0, 1)");
  if (!(noise_std > 0.0)) throw Error("noise_std must be > 0");
  if (run_length < 0) throw Error("run_length must be >= 0");
}

Vector synthetic_direction(const SyntheticConfig& cfg) {
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector u(cfg.n_channels);
  do {
    for (Eigen::Index k = 0; k < u.size(); ++k) u[k] = normal(rng);
  } while (u.norm() < 1e-12);
  return u / u.norm();
}

std::vector<Segment> generate(const SyntheticConfig& cfg) {
  cfg.validate();
  const Vector u = synthetic_direction(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_std);

  const int run = cfg.run_length > 0 ? cfg.run_length : cfg.segments_per_class;
  struct Run {
    ClassIndex label;
    int count;
  };
  std::vector<Run> runs;
  for (int c = 0; c < cfg.n_classes; ++c) {
    for (int done = 0; done < cfg.segments_per_class; done += run) {
      runs.push_back({static_cast<ClassIndex>(c), std::min(run, cfg.segments_per_class - done)});
    }
  }
  std::shuffle(runs.begin(), runs.end(), rng);

  const double phi = cfg.ar_coefficient;
  const double stationary_scale = 1.0 / std::sqrt(1.0 - phi * phi);
  std::vector<Segment> out;
  out.reserve(static_cast<std::size_t>(cfg.n_classes) * static_cast<std::size_t>(cfg.segments_per_class));
  std::int64_t position = 0;
  for (const auto& r : runs) {
    const double ordinal = static_cast<double>(r.label) + 1.0;
    const Vector mu = ordinal * cfg.class_separation * u;
    for (int s = 0; s < r.count; ++s) {
      Matrix values(cfg.segment_length, cfg.n_channels);
      for (int ch = 0; ch < cfg.n_channels; ++ch) {
        double v = mu[ch] + stationary_scale * noise(rng);
        values(0, ch) = v;
        for (int t = 1; t < cfg.segment_length; ++t) {
          v = mu[ch] + phi * (v - mu[ch]) + noise(rng);
          values(t, ch) = v;
        }
      }
      out.emplace_back(std::move(values), r.label, position++);
    }
  }
  return out;
}

void StreamSpec::validate() const {
  if (window_length < 1) throw Error("window_length must be >= 1");
  if (stride < 0) throw Error("stride must be >= 1 (or 0 for non-overlapping windows)");
  if (label_column.empty()) throw Error("label column name is empty");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_number(std::string_view cell, std::size_t row, std::string_view column) {
  double value = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (ec != std::errc() || ptr != end || cell.empty() || !std::isfinite(value)) {
    throw Error("row " + std::to_string(row) + ", column '" + std::string(column) + "': '" +
                std::string(cell) + "' is not a finite number");
  }
  return value;
}

}  // namespace

std::vector<Segment> ingest_csv(const std::filesystem::path& path, const StreamSpec& spec,
                                const LabelSpace& space) {
  spec.validate();
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error("'" + path.string() + "' is empty (header row required)");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_row(line);
  std::map<std::string, std::size_t, std::less<>> column_of;
  for (std::size_t k = 0; k < header.size(); ++k) column_of.emplace(std::string(header[k]), k);

  const auto label_it = column_of.find(spec.label_column);
  if (label_it == column_of.end()) throw Error("missing label column '" + spec.label_column + "'");
  const std::size_t label_col = label_it->second;

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  if (spec.feature_columns.empty()) {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (k == label_col) continue;
      feature_cols.push_back(k);
      feature_names.emplace_back(header[k]);
    }
  } else {
    for (const auto& name : spec.feature_columns) {
      const auto it = column_of.find(name);
      if (it == column_of.end()) throw Error("missing feature column '" + name + "'");
      feature_cols.push_back(it->second);
      feature_names.push_back(name);
    }
  }
  if (feature_cols.empty()) throw Error("no feature columns");

  std::vector<ClassIndex> labels;
  std::vector<std::vector<double>> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size()) {
      throw Error("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells, header has " +
                  std::to_string(header.size()));
    }
    const auto label = cells[label_col];
    if (!space.contains(label)) {
      throw Error("row " + std::to_string(row) + ": label '" + std::string(label) + "' is not in the label domain");
    }
    labels.push_back(space.index_of(label));
    std::vector<double> values;
    values.reserve(feature_cols.size());
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      values.push_back(parse_number(cells[feature_cols[k]], row, feature_names[k]));
    }
    rows.push_back(std::move(values));
    ++row;
  }

  const auto window = static_cast<std::size_t>(spec.window_length);
  const auto stride = static_cast<std::size_t>(spec.effective_stride());
  const auto channels = static_cast<Eigen::Index>(feature_cols.size());
  std::vector<Segment> out;
  std::size_t run_start = 0;
  while (run_start < rows.size()) {
    std::size_t run_end = run_start + 1;
    while (run_end < rows.size() && labels[run_end] == labels[run_start]) ++run_end;
    for (std::size_t w = run_start; w + window <= run_end; w += stride) {
      Matrix values(static_cast<Eigen::Index>(window), channels);
      for (std::size_t t = 0; t < window; ++t) {
        for (Eigen::Index ch = 0; ch < channels; ++ch) values(static_cast<Eigen::Index>(t), ch) = rows[w + t][ch];
      }
      out.emplace_back(std::move(values), labels[run_start], static_cast<std::int64_t>(w));
    }
    run_start = run_end;
  }
  return out;
}

void write_csv(const std::filesystem::path& path, std::span<const Segment> segments, const LabelSpace& space,
               const std::string& label_column) {
  std::vector<const Segment*> ordered;
  ordered.reserve(segments.size());
  for (const auto& s : segments) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->source_index() < b->source_index(); });

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  const auto channels = segments.empty() ? 0 : segments.front().n_channels();
  out << label_column;
  for (Eigen::Index ch = 0; ch < channels; ++ch) out << ",ch" << ch;
  out << '\n';
  out << std::setprecision(17);
  for (const auto* s : ordered) {
    if (s->n_channels() != channels) throw Error("segments differ in channel count");
    const auto& label = space.id(s->class_index());
    for (Eigen::Index t = 0; t < s->window_length(); ++t) {
      out << label;
      for (Eigen::Index ch = 0; ch < channels; ++ch) out << ',' << s->values()(t, ch);
      out << '\n';
    }
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

HoldoutSplit split_holdout(std::span<const Segment> segments, double test_fraction,
                           const std::vector<ClassIndex>& missing, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("test_fraction must lie in (0, 1)");
  std::map<ClassIndex, std::vector<std::size_t>> by_class;
  for (std::size_t k = 0; k < segments.size(); ++k) by_class[segments[k].class_index()].push_back(k);

  std::mt19937_64 rng(seed);
  std::vector<bool> to_test(segments.size(), false);
  for (auto& [c, idx] : by_class) {
    if (std::find(missing.begin(), missing.end(), c) != missing.end()) {
      for (auto k : idx) to_test[k] = true;
      continue;
    }
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    if (n_test >= idx.size()) {
      throw Error("class index " + std::to_string(c) + " would lose all of its " + std::to_string(idx.size()) +
                  " training segments to the test split");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t m = 0; m < n_test; ++m) to_test[idx[m]] = true;
  }

  HoldoutSplit out;
  for (std::size_t k = 0; k < segments.size(); ++k) (to_test[k] ? out.test : out.train).push_back(segments[k]);
  const auto by_source = [](const Segment& a, const Segment& b) { return a.source_index() < b.source_index(); };
  std::stable_sort(out.train.begin(), out.train.end(), by_source);
  std::stable_sort(out.test.begin(), out.test.end(), by_source);
  return out;
}

}  // namespace ordinal
