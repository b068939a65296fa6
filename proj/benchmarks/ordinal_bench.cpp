#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ordinal/data.hpp"
#include "ordinal/encoder.hpp"
#include "ordinal/retrieval.hpp"
#include "ordinal/stats.hpp"

using namespace ordinal;

namespace {

std::vector<double> tied_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> v(0, 20);
  std::vector<double> out(n);
  for (auto& x : out) x = v(rng);
  return out;
}

void BM_kendall(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = tied_values(n, 1), y = tied_values(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kendall_tau_b(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_kendall)->RangeMultiplier(4)->Range(16, 16384)->Complexity(benchmark::oNLogN);

void BM_spearman(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = tied_values(n, 1), y = tied_values(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(spearman_rho(x, y));
}
BENCHMARK(BM_spearman)->RangeMultiplier(4)->Range(16, 16384);

EncoderConfig encoder(EncoderKind kind, int hidden) {
  EncoderConfig cfg;
  cfg.kind = kind;
  cfg.n_channels = 4;
  cfg.hidden_dim = hidden;
  cfg.embed_dim = hidden / 2;
  cfg.window_length = 10;
  cfg.seed = 3;
  return cfg;
}

Matrix window(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  Matrix m(10, 4);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
  return m;
}

void BM_forward(benchmark::State& state) {
  const auto model = init_model(encoder(static_cast<EncoderKind>(state.range(0)), static_cast<int>(state.range(1))));
  const Matrix x = window(4);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, x));
}
BENCHMARK(BM_forward)->ArgsProduct({{0, 1}, {32, 128}});

void BM_backward(benchmark::State& state) {
  const auto model = init_model(encoder(static_cast<EncoderKind>(state.range(0)), static_cast<int>(state.range(1))));
  const Matrix x = window(4);
  const Vector upstream = Vector::Ones(model.config().embed_dim);
  for (auto _ : state) benchmark::DoNotOptimize(backward(model, x, upstream));
}
BENCHMARK(BM_backward)->ArgsProduct({{0, 1}, {32, 128}});

void BM_classify(benchmark::State& state) {
  const int n_classes = static_cast<int>(state.range(0));
  std::vector<ClassIndex> missing;
  for (int c = 1; c + 1 < n_classes; c += 4) missing.push_back(static_cast<ClassIndex>(c));
  const auto space = LabelSpace::numbered(n_classes).with_missing(missing);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 1);
  const auto unit = [&] {
    Vector v(16);
    for (auto& x : v) x = g(rng);
    return FeatureVector::normalize(v);
  };
  std::vector<FeatureVector> features;
  std::vector<ClassIndex> labels;
  for (auto c : space.present()) {
    for (int m = 0; m < 50; ++m) {
      features.push_back(unit());
      labels.push_back(c);
    }
  }
  const EmbeddingStore store(space, features, labels);
  const LabelRankMatrix L(space);
  const Vector f = unit().values();
  for (auto _ : state) benchmark::DoNotOptimize(classify(store, L, f, space));
}
BENCHMARK(BM_classify)->Arg(10)->Arg(40)->Arg(160);

}  // namespace
BENCHMARK_MAIN();
