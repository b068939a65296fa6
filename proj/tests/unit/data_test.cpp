#include "ordinal/data.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "gtest/gtest.h"
#include "ordinal/error.hpp"

using namespace ordinal;

namespace {

std::filesystem::path temp_csv(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("ordinal_data_test_" + name + ".csv");
  std::ofstream(path) << body;
  return path;
}

std::string rows(const std::string& label, int n, int start = 0) {
  std::string s;
  for (int k = 0; k < n; ++k) s += label + "," + std::to_string(start + k) + "," + std::to_string(-(start + k)) + "\n";
  return s;
}

SyntheticConfig small_synthetic() {
  SyntheticConfig cfg;
  cfg.n_classes = 5;
  cfg.n_channels = 3;
  cfg.segment_length = 10;
  cfg.segments_per_class = 20;
  cfg.run_length = 5;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST(generate, time_mean_near_class_mean) {
  auto cfg = small_synthetic();
  cfg.noise_std = 1e-3;
  cfg.ar_coefficient = 0.0;
  cfg.class_separation = 0.7;
  const auto u = synthetic_direction(cfg);
  const double bound = 5 * cfg.noise_std / std::sqrt(static_cast<double>(cfg.segment_length));
  for (const auto& s : generate(cfg)) {
    const Vector mu = (static_cast<double>(s.class_index()) + 1.0) * cfg.class_separation * u;
    const Vector mean = s.values().colwise().mean().transpose();
    EXPECT_LT((mean - mu).cwiseAbs().maxCoeff(), bound);
  }
}

TEST(generate, class_means_are_evenly_spaced) {
  auto cfg = small_synthetic();
  cfg.class_separation = 0.4;
  const auto u = synthetic_direction(cfg);
  EXPECT_NEAR(u.norm(), 1.0, 1e-12);
  for (int i = 1; i <= 5; ++i) {
    for (int j = 1; j <= 5; ++j) {
      const double d = ((i - j) * cfg.class_separation * u).norm();
      EXPECT_NEAR(d, std::abs(i - j) * 0.4, 1e-12);
    }
  }
}

TEST(generate, deterministic_layout) {
  const auto cfg = small_synthetic();
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  ASSERT_EQ(a.size(), 100u);
  std::map<ClassIndex, int> count;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].values(), b[k].values());
    EXPECT_EQ(a[k].source_index(), static_cast<std::int64_t>(k));
    ++count[a[k].class_index()];
  }
  for (const auto& [c, n] : count) EXPECT_EQ(n, 20);
  // label-constant runs of run_length segments
  for (std::size_t k = 0; k < a.size(); k += 5) {
    for (std::size_t j = k; j < k + 5; ++j) EXPECT_EQ(a[j].class_index(), a[k].class_index());
  }
  auto other = cfg;
  other.seed = 12;
  EXPECT_NE(generate(other)[0].values(), a[0].values());
}

TEST(generate, config_errors) {
  auto cfg = small_synthetic();
  cfg.n_classes = 2;
  EXPECT_THROW((void)generate(cfg), Error);
  cfg = small_synthetic();
  cfg.ar_coefficient = 1.0;
  EXPECT_THROW((void)generate(cfg), Error);
  cfg = small_synthetic();
  cfg.noise_std = 0;
  EXPECT_THROW((void)generate(cfg), Error);
}

TEST(ingest, strided_windows) {
  const auto space = LabelSpace::numbered(2);
  const auto path = temp_csv("strided", "label,x,y\n" + rows("c1", 25));
  StreamSpec spec;
  spec.window_length = 10;
  spec.stride = 5;
  const auto segs = ingest_csv(path, spec, space);
  ASSERT_EQ(segs.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(segs[k].source_index(), static_cast<std::int64_t>(5 * k));
    EXPECT_EQ(segs[k].values()(0, 0), 5.0 * static_cast<double>(k));
  }
  std::filesystem::remove(path);
}

TEST(ingest, short_runs_and_label_changes) {
  const auto space = LabelSpace::numbered(2);
  // c1 run of 4 (too short), c2 run of 12, c1 run of 10
  const auto path = temp_csv("runs", "label,x,y\n" + rows("c1", 4) + rows("c2", 12, 4) + rows("c1", 10, 16));
  StreamSpec spec;
  spec.window_length = 5;
  const auto segs = ingest_csv(path, spec, space);
  ASSERT_EQ(segs.size(), 4u);
  EXPECT_EQ(segs[0].source_index(), 4);
  EXPECT_EQ(segs[1].source_index(), 9);
  EXPECT_EQ(segs[2].source_index(), 16);
  EXPECT_EQ(segs[3].source_index(), 21);
  EXPECT_EQ(segs[1].class_index(), 1u);
  EXPECT_EQ(segs[3].class_index(), 0u);
  std::filesystem::remove(path);
}

TEST(ingest, column_selection) {
  const auto space = LabelSpace::numbered(2);
  const auto path = temp_csv("columns", "x,label,y\n1,c1,2\n3,c1,4\n");
  StreamSpec spec;
  spec.window_length = 2;
  spec.feature_columns = {"y"};
  const auto segs = ingest_csv(path, spec, space);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].n_channels(), 1);
  EXPECT_EQ(segs[0].values()(1, 0), 4.0);
  spec.feature_columns = {"z"};
  EXPECT_THROW((void)ingest_csv(path, spec, space), Error);
  std::filesystem::remove(path);
}

TEST(ingest, errors) {
  const auto space = LabelSpace::numbered(2);
  StreamSpec spec;
  spec.window_length = 2;
  const auto unknown = temp_csv("unknown", "label,x\nc1,1\nc7,2\n");
  try {
    (void)ingest_csv(unknown, spec, space);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("c7"), std::string::npos) << msg;
  }
  const auto text = temp_csv("text", "label,x\nc1,1\nc1,abc\n");
  EXPECT_THROW((void)ingest_csv(text, spec, space), Error);
  const auto ragged = temp_csv("ragged", "label,x\nc1,1,5\n");
  EXPECT_THROW((void)ingest_csv(ragged, spec, space), Error);
  const auto nolabel = temp_csv("nolabel", "y,x\n1,1\n");
  EXPECT_THROW((void)ingest_csv(nolabel, spec, space), Error);
  EXPECT_THROW((void)ingest_csv("/nonexistent/file.csv", spec, space), Error);
  for (const auto& p : {unknown, text, ragged, nolabel}) std::filesystem::remove(p);
  spec.window_length = 0;
  EXPECT_THROW(spec.validate(), Error);
}

TEST(ingest, round_trip_reconstructs_rows) {
  auto cfg = small_synthetic();
  cfg.run_length = 0;
  const auto space = LabelSpace::numbered(cfg.n_classes);
  const auto segs = generate(cfg);
  const auto path = std::filesystem::temp_directory_path() / "ordinal_data_test_round_trip.csv";
  write_csv(path, segs, space);
  StreamSpec spec;
  spec.window_length = cfg.segment_length;
  const auto back = ingest_csv(path, spec, space);
  ASSERT_EQ(back.size(), segs.size());
  for (std::size_t k = 0; k < segs.size(); ++k) {
    EXPECT_EQ(back[k].class_index(), segs[k].class_index());
    EXPECT_EQ(back[k].source_index(), static_cast<std::int64_t>(k) * cfg.segment_length);
    EXPECT_LT((back[k].values() - segs[k].values()).cwiseAbs().maxCoeff(), 1e-12);
  }
  std::filesystem::remove(path);
}

TEST(split, missing_classes_go_to_test) {
  const auto segs = generate(small_synthetic());
  const auto split = split_holdout(segs, 0.2, {2}, 1);
  for (const auto& s : split.train) EXPECT_NE(s.class_index(), 2u);
  std::map<ClassIndex, int> test_count;
  for (const auto& s : split.test) ++test_count[s.class_index()];
  EXPECT_EQ(test_count[2], 20);
  EXPECT_EQ(split.train.size() + split.test.size(), segs.size());
  for (std::size_t k = 1; k < split.test.size(); ++k) {
    EXPECT_LT(split.test[k - 1].source_index(), split.test[k].source_index());
  }
}

TEST(split, stratified_counts) {
  auto cfg = small_synthetic();
  cfg.segments_per_class = 23;
  const auto segs = generate(cfg);
  const auto split = split_holdout(segs, 0.2, {}, 4);
  std::map<ClassIndex, int> test_count;
  for (const auto& s : split.test) ++test_count[s.class_index()];
  for (ClassIndex c = 0; c < 5; ++c) {
    EXPECT_LE(std::abs(test_count[c] - static_cast<int>(std::ceil(0.2 * 23))), 1);
  }
}

TEST(split, deterministic_and_disjoint) {
  const auto segs = generate(small_synthetic());
  const auto a = split_holdout(segs, 0.3, {0}, 9);
  const auto b = split_holdout(segs, 0.3, {0}, 9);
  ASSERT_EQ(a.test.size(), b.test.size());
  std::set<std::int64_t> test_ids;
  for (std::size_t k = 0; k < a.test.size(); ++k) {
    EXPECT_EQ(a.test[k].source_index(), b.test[k].source_index());
    test_ids.insert(a.test[k].source_index());
  }
  for (const auto& s : a.train) EXPECT_FALSE(test_ids.count(s.source_index()));
  const auto c = split_holdout(segs, 0.3, {0}, 10);
  bool differs = false;
  for (std::size_t k = 0; k < c.test.size() && k < a.test.size(); ++k) {
    differs = differs || c.test[k].source_index() != a.test[k].source_index();
  }
  EXPECT_TRUE(differs);
}

TEST(split, errors) {
  const auto segs = generate(small_synthetic());
  EXPECT_THROW((void)split_holdout(segs, 0.0, {}, 1), Error);
  EXPECT_THROW((void)split_holdout(segs, 1.0, {}, 1), Error);
  // one member per class: any positive share empties the class
  std::vector<Segment> tiny;
  for (ClassIndex c = 0; c < 3; ++c) tiny.emplace_back(Matrix::Zero(2, 1), c, c);
  EXPECT_THROW((void)split_holdout(tiny, 0.9, {}, 1), Error);
}
