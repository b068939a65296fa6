#include "ordinal/retrieval.hpp"

#include <map>
#include <random>
#include <set>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "ordinal/error.hpp"

using namespace ordinal;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

struct Toy {
  std::vector<FeatureVector> features;
  std::vector<ClassIndex> labels;
  std::vector<std::vector<Vector>> members;

  explicit Toy(std::size_t domain) : members(domain) {}
  void add(ClassIndex c, const Vector& f) {
    features.emplace_back(f);
    labels.push_back(c);
    members[c].push_back(f);
  }
  [[nodiscard]] EmbeddingStore store(const LabelSpace& space) const { return {space, features, labels}; }
};

// Embeddings clustered around a direction that rotates with the class ordinal.
Toy ordinal_clusters(const LabelSpace& space, int per_class, double spread, std::mt19937_64& rng) {
  Toy toy(space.size());
  std::normal_distribution<double> g(0, spread);
  for (ClassIndex c = 0; c < space.size(); ++c) {
    if (space.is_missing(c)) continue;
    const double angle = 0.25 * static_cast<double>(c);
    for (int m = 0; m < per_class; ++m) {
      Vector v = vec({std::cos(angle), std::sin(angle), 0.3});
      for (auto& x : v) x += g(rng);
      toy.add(c, v / v.norm());
    }
  }
  return toy;
}

}  // namespace

TEST(store, single_member_classes) {
  const auto space = LabelSpace::numbered(2);
  Toy toy(2);
  toy.add(0, vec({1, 0}));
  toy.add(1, vec({0, 1}));
  const auto store = toy.store(space);
  EXPECT_EQ(store.centroid(0), vec({1, 0}));
  ASSERT_EQ(store.population(1).size(), 1u);
  EXPECT_EQ(store.population(1)[0], 0.0);
  EXPECT_EQ(store.classes(), (std::vector<ClassIndex>{0, 1}));
}

TEST(store, two_member_mean) {
  const auto space = LabelSpace::numbered(2);
  Toy toy(2);
  toy.add(0, vec({1, 0}));
  toy.add(0, vec({0.6, 0.8}));
  toy.add(1, vec({0, 1}));
  const auto store = toy.store(space);
  EXPECT_NEAR((store.centroid(0) - vec({0.8, 0.4})).norm(), 0.0, 1e-15);
  EXPECT_EQ(toy.store(space).centroid(0), store.centroid(0));
  const auto pop = store.population(0);
  EXPECT_NEAR(pop[0], oracle::sq_dist(vec({1, 0}), vec({0.8, 0.4})), 1e-15);
  EXPECT_NEAR(pop[1], oracle::sq_dist(vec({0.6, 0.8}), vec({0.8, 0.4})), 1e-15);
}

TEST(store, errors) {
  const auto space = LabelSpace::numbered(3).with_missing({1});
  Toy toy(3);
  toy.add(0, vec({1, 0}));
  EXPECT_THROW((void)toy.store(space), Error);  // class 2 has no members
  toy.add(2, vec({0, 1}));
  EXPECT_NO_THROW((void)toy.store(space));
  toy.add(1, vec({0, 1}));
  EXPECT_THROW((void)toy.store(space), Error);  // missing class with members
  EXPECT_THROW((void)toy.store(LabelSpace::numbered(3)).centroid(5), Error);
}

TEST(label_rank_matrix, rows_over_present_columns) {
  const auto space = LabelSpace::numbered(4).with_missing({1});
  const LabelRankMatrix L(space);
  EXPECT_EQ(L.rows(), 4u);
  EXPECT_EQ(L.columns(), (std::vector<ClassIndex>{0, 2, 3}));
  const auto row = L.row(1);
  EXPECT_EQ(std::vector<double>(row.begin(), row.end()), (std::vector<double>{1, 1, 2}));
}

TEST(knn, examples) {
  const auto space = LabelSpace::numbered(3);
  Toy toy(3);
  toy.add(0, vec({1, 0}));
  toy.add(1, vec({0, 1}));
  toy.add(2, vec({-1, 0}));
  const auto store = toy.store(space);
  EXPECT_EQ(knn_predict(store, vec({0, 1})), 1u);
  // equidistant from classes 0 and 2
  EXPECT_EQ(knn_predict(store, vec({0, -1})), 0u);
  EXPECT_THROW((void)knn_predict(store, vec({0, 1}), 0), Error);
}

TEST(knn, k3_matches_enumeration) {
  std::mt19937_64 rng(77);
  const auto space = LabelSpace::numbered(3);
  for (int trial = 0; trial < 300; ++trial) {
    Toy toy(3);
    for (ClassIndex c = 0; c < 3; ++c) {
      toy.add(c, oracle::random_unit(rng, 2));
      toy.add(c, oracle::random_unit(rng, 2));
    }
    const auto store = toy.store(space);
    const Vector f = oracle::random_unit(rng, 2);

    // every member, sorted by distance; vote over the first three
    std::vector<std::pair<double, ClassIndex>> all;
    for (ClassIndex c = 0; c < 3; ++c) {
      for (const auto& m : toy.members[c]) all.emplace_back(oracle::sq_dist(f, m), c);
    }
    std::sort(all.begin(), all.end());
    std::map<ClassIndex, std::pair<int, double>> votes;
    for (int k = 0; k < 3; ++k) {
      votes[all[k].second].first += 1;
      votes[all[k].second].second += all[k].first;
    }
    ClassIndex expected = 0;
    double best_count = -1, best_mean = 0;
    for (const auto& [c, v] : votes) {
      const double mean = v.second / v.first;
      if (v.first > best_count || (v.first == best_count && mean < best_mean)) {
        expected = c;
        best_count = v.first;
        best_mean = mean;
      }
    }
    ASSERT_EQ(knn_predict(store, f, 3), expected) << "trial " << trial;
  }
}

TEST(classify, midpoint_of_missing_neighbour) {
  // three classes in order, the middle one missing; f_te sits exactly between the outer centroids
  const auto space = LabelSpace({{"triangle", 1}, {"circle", 2}, {"plus", 3}}, {"circle"});
  Toy toy(3);
  toy.add(0, vec({1, 0}));
  toy.add(2, vec({0, 1}));
  const auto store = toy.store(space);
  const Vector f = vec({1, 1}) / std::sqrt(2.0);
  const auto t = classify(store, LabelRankMatrix(space), f, space);
  EXPECT_TRUE(t.degenerate);
  EXPECT_EQ(t.scores, (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(t.first, 1u);
  EXPECT_EQ(t.branch, Branch::Test);
  EXPECT_EQ(t.decision, Decision::RejectToMissing);
  EXPECT_EQ(t.label, 1u);
  EXPECT_EQ(oracle::classify(space, toy.members, f, 0.05).label, 1u);
}

TEST(classify, degenerate_without_exact_row_falls_back) {
  const auto space = LabelSpace::numbered(3).with_missing({2});
  Toy toy(3);
  toy.add(0, vec({1, 0}));
  toy.add(1, vec({0, 1}));
  const auto store = toy.store(space);
  const auto t = classify(store, LabelRankMatrix(space), vec({1, 1}) / std::sqrt(2.0), space);
  EXPECT_TRUE(t.degenerate);
  EXPECT_EQ(t.branch, Branch::Knn);
  EXPECT_EQ(t.label, 0u);
}

TEST(classify, no_missing_reduces_to_knn) {
  std::mt19937_64 rng(5);
  const auto space = LabelSpace::numbered(6);
  const auto toy = ordinal_clusters(space, 8, 0.1, rng);
  const auto store = toy.store(space);
  const LabelRankMatrix L(space);
  for (int trial = 0; trial < 500; ++trial) {
    const Vector f = oracle::random_unit(rng, 3);
    const auto t = classify(store, L, f, space);
    ASSERT_EQ(t.branch, Branch::Knn);
    ASSERT_EQ(t.label, knn_predict(store, f));
    ASSERT_EQ(t.label, oracle::nearest(std::vector<Vector>{store.centroid(0), store.centroid(1), store.centroid(2),
                                                           store.centroid(3), store.centroid(4), store.centroid(5)},
                                       f));
  }
}

TEST(classify, own_member_retained_by_test) {
  const auto space = LabelSpace::numbered(3).with_missing({2});
  std::mt19937_64 rng(2);
  Toy toy(3);
  std::normal_distribution<double> g(0, 0.05);
  for (int m = 0; m < 40; ++m) {
    Vector a = vec({1, g(rng)}), b = vec({g(rng), 1});
    toy.add(0, a / a.norm());
    toy.add(1, b / b.norm());
  }
  const auto store = toy.store(space);
  // the member of class 1 closest to its centroid
  std::size_t best = 0;
  for (std::size_t k = 0; k < toy.members[1].size(); ++k) {
    const auto& c = store.centroid(1);
    if (oracle::sq_dist(toy.members[1][k], c) < oracle::sq_dist(toy.members[1][best], c)) best = k;
  }
  const auto t = classify(store, LabelRankMatrix(space), toy.members[1][best], space);
  EXPECT_EQ(t.branch, Branch::Test);
  EXPECT_EQ(t.first, 1u);
  EXPECT_EQ(t.second, 2u);
  EXPECT_EQ(t.decision, Decision::RetainNonMissing);
  EXPECT_EQ(t.label, 1u);
  EXPECT_LE(*t.d_te, *t.threshold);
}

TEST(classify, agrees_with_exhaustive_reimplementation) {
  const auto space = LabelSpace::numbered(10).with_missing({3, 7});  // ordinals 4 and 8
  std::mt19937_64 rng(404);
  const auto toy = ordinal_clusters(space, 12, 0.15, rng);
  const auto store = toy.store(space);
  const LabelRankMatrix L(space);
  std::uniform_int_distribution<int> pick(0, 9);
  std::set<Branch> seen;
  for (bool spearman : {false, true}) {
    ClassifyOptions opt;
    opt.stat = spearman ? RankStatKind::SpearmanRho : RankStatKind::KendallTauB;
    for (int trial = 0; trial < 500; ++trial) {
      // half near a class direction, half anywhere on the sphere
      Vector f = oracle::random_unit(rng, 3);
      if (trial % 2 == 0) {
        const double angle = 0.25 * pick(rng);
        f = vec({std::cos(angle), std::sin(angle), 0.3}) + 0.08 * f;
        f /= f.norm();
      }
      const auto t = classify(store, L, f, space, opt);
      const auto want = oracle::classify(space, toy.members, f, opt.test.alpha, spearman);
      ASSERT_EQ(t.label, want.label) << "trial " << trial;
      ASSERT_EQ(t.branch, want.branch) << "trial " << trial;
      if (!t.degenerate) {
        ASSERT_EQ(t.first, want.first);
        ASSERT_EQ(t.second, want.second);
      }
      seen.insert(t.branch);
    }
  }
  EXPECT_TRUE(seen.count(Branch::Knn) && seen.count(Branch::Test)) << "sweep should reach both common branches";
}

TEST(classify, both_missing_branch) {
  // squared label distance breaks the mean-distance tie between rows with the same ranking
  const auto space = LabelSpace::numbered(7, 1, LabelDistanceKind::Squared).with_missing({2, 3, 4});
  Toy toy(7);
  for (ClassIndex c : {0u, 1u, 5u, 6u}) toy.add(c, vec({std::cos(0.2 * c), std::sin(0.2 * c)}));
  const auto store = toy.store(space);
  // nearest 1, then 5, then 0, then 6
  const Vector f = vec({std::cos(0.55), std::sin(0.55)});
  const auto t = classify(store, LabelRankMatrix(space), f, space);
  EXPECT_EQ(t.branch, Branch::BothMissing);
  EXPECT_EQ(t.first, 3u);
  EXPECT_EQ(t.second, 2u);
  EXPECT_EQ(t.label, 3u);
  EXPECT_FALSE(t.decision.has_value());
  const auto want = oracle::classify(space, toy.members, f, 0.05);
  EXPECT_EQ(want.branch, Branch::BothMissing);
  EXPECT_EQ(want.label, 3u);
}

TEST(interpolate, single_gap_midpoint) {
  const auto space = LabelSpace::numbered(3).with_missing({1});
  Toy toy(3);
  toy.add(0, vec({1, 0}));
  toy.add(2, vec({0, 1}));
  const auto c = interpolate_missing(toy.store(space), space);
  EXPECT_NEAR((c[1] - (0.5 * vec({1, 0}) + 0.5 * vec({0, 1}))).norm(), 0.0, 1e-15);
  EXPECT_EQ(c[0], vec({1, 0}));
}

TEST(interpolate, gap_weighted) {
  const auto space = LabelSpace({{"c2", 2}, {"c3", 3}, {"c5", 5}}, {"c3"});
  Toy toy(3);
  toy.add(0, vec({1, 0}));
  toy.add(2, vec({0, 1}));
  const auto c = interpolate_missing(toy.store(space), space);
  EXPECT_NEAR((c[1] - vec({2.0 / 3.0, 1.0 / 3.0})).norm(), 0.0, 1e-15);
}

TEST(interpolate, boundary_extrapolation) {
  auto space = LabelSpace::numbered(3).with_missing({0});
  Toy toy(3);
  toy.add(1, vec({1, 0}));
  toy.add(2, vec({0.6, 0.8}));
  auto c = interpolate_missing(toy.store(space), space);
  EXPECT_NEAR((c[0] - (2 * vec({1, 0}) - vec({0.6, 0.8}))).norm(), 0.0, 1e-15);

  space = LabelSpace::numbered(4).with_missing({2, 3});
  Toy top(4);
  top.add(0, vec({1, 0}));
  top.add(1, vec({0.6, 0.8}));
  c = interpolate_missing(top.store(space), space);
  const Vector step = vec({0.6, 0.8}) - vec({1, 0});
  EXPECT_NEAR((c[2] - (vec({0.6, 0.8}) + step)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((c[3] - (vec({0.6, 0.8}) + 2 * step)).norm(), 0.0, 1e-15);
}

TEST(baseline, examples_and_enumeration) {
  const std::vector<Vector> cs{vec({1, 0}), vec({0, 1}), vec({-1, 0})};
  EXPECT_EQ(baseline_predict(cs, vec({0, 1})), 1u);
  EXPECT_EQ(baseline_predict(cs, vec({0, -1})), 0u);
  EXPECT_THROW((void)baseline_predict(std::vector<Vector>{}, vec({0, 1})), Error);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Vector> centroids;
    for (int k = 0; k < 7; ++k) centroids.push_back(oracle::random_unit(rng, 4));
    const Vector f = oracle::random_unit(rng, 4);
    ASSERT_EQ(baseline_predict(centroids, f), oracle::nearest(centroids, f));
  }
}

TEST(window_correct, examples) {
  using V = std::vector<ClassIndex>;
  const V a{0, 0, 1, 0, 2};
  EXPECT_EQ(window_correct(a, 5), (V{0, 0, 0, 0, 0}));
  EXPECT_EQ(window_correct(a, 0), a);
  // previous window corrected to class 1, then a 2-2 tie between 0 and 1
  EXPECT_EQ(window_correct(V{1, 1, 1, 0, 0, 0, 1, 1}, 4), (V{1, 1, 1, 1, 1, 1, 1, 1}));
  // no previous window: lowest ordinal wins the tie
  EXPECT_EQ(window_correct(V{2, 2, 1, 1}, 4), (V{1, 1, 1, 1}));
  // short final window
  EXPECT_EQ(window_correct(V{0, 0, 0, 2, 2}, 3), (V{0, 0, 0, 2, 2}));
  EXPECT_TRUE(window_correct(V{}, 3).empty());
}

TEST(window_correct, stays_within_each_window) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<ClassIndex> cls(0, 3);
  std::uniform_int_distribution<std::size_t> wsize(1, 9);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ClassIndex> p(40);
    for (auto& v : p) v = cls(rng);
    const auto w = wsize(rng);
    const auto out = window_correct(p, w);
    ASSERT_EQ(out.size(), p.size());
    for (std::size_t start = 0; start < p.size(); start += w) {
      const auto end = std::min(p.size(), start + w);
      const std::set<ClassIndex> present(p.begin() + start, p.begin() + end);
      std::map<ClassIndex, int> count;
      for (auto k = start; k < end; ++k) ++count[p[k]];
      int top = 0;
      for (const auto& [c, n] : count) top = std::max(top, n);
      for (auto k = start; k < end; ++k) {
        ASSERT_EQ(out[k], out[start]);
        ASSERT_TRUE(present.count(out[k]));
        ASSERT_EQ(count[out[k]], top);
      }
    }
  }
}
