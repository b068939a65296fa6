#include "ordinal/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "ordinal/data.hpp"
#include "ordinal/error.hpp"
#include "ordinal/io.hpp"

namespace ordinal {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_missing_set(const std::vector<ClassIndex>& set, Protocol protocol, std::size_t domain_size) {
  auto sorted = set;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw Error("missing set repeats a class");
  if (!sorted.empty() && sorted.back() >= domain_size) throw Error("missing set names a class outside the domain");
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    const auto gap = sorted[k] - sorted[k - 1];
    if (protocol == Protocol::Nonconsecutive && gap < 2) {
      throw Error("nonconsecutive missing set has adjacent classes");
    }
    if (protocol == Protocol::Consecutive && gap != 1) throw Error("consecutive missing set is not one run");
  }
}

}  // namespace

void ExperimentSpec::validate(std::size_t domain_size) const {
  if (n_missing < 1) throw Error("n_missing must be >= 1");
  if (n_repeats < 1) throw Error("n_repeats must be >= 1");
  const auto s = static_cast<int>(domain_size);
  if (s - n_missing < 2) throw Error("at least two classes must stay present");
  if (protocol == Protocol::Nonconsecutive && n_missing > (s + 1) / 2) {
    throw Error("infeasible: " + std::to_string(n_missing) + " nonconsecutive missing classes in a domain of " +
                std::to_string(s));
  }
  if (!seeds.empty() && static_cast<int>(seeds.size()) != n_repeats) {
    throw Error("seeds must list one seed per repeat");
  }
  if (!fixed_missing.empty()) {
    if (static_cast<int>(fixed_missing.size()) != n_repeats) throw Error("fixed_missing must list one set per repeat");
    for (const auto& set : fixed_missing) {
      if (static_cast<int>(set.size()) != n_missing) throw Error("fixed missing set has the wrong size");
      check_missing_set(set, protocol, domain_size);
    }
  }
  if (window_sizes.empty()) throw Error("window_sizes must not be empty");
  for (auto w : window_sizes) {
    if (w < 0) throw Error("window sizes must be >= 0");
  }
  if (methods.empty()) throw Error("at least one method is required");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("test_fraction must lie in (0, 1)");
  encoder.validate();
  train.validate();
}

std::uint64_t ExperimentSpec::repeat_seed(int repeat) const {
  if (!seeds.empty()) return seeds.at(static_cast<std::size_t>(repeat));
  return splitmix64(base_seed + static_cast<std::uint64_t>(repeat));
}

std::vector<ClassIndex> sample_missing_set(Protocol protocol, int n_missing, std::size_t domain_size,
                                           std::mt19937_64& rng) {
  const auto s = static_cast<int>(domain_size);
  if (n_missing < 1 || s - n_missing < 2) throw Error("cannot sample a missing set of that size");
  std::vector<ClassIndex> out;
  if (protocol == Protocol::Consecutive) {
    std::uniform_int_distribution<int> start(0, s - n_missing);
    const int first = start(rng);
    for (int k = 0; k < n_missing; ++k) out.push_back(static_cast<ClassIndex>(first + k));
    return out;
  }
  if (n_missing > (s + 1) / 2) throw Error("too many nonconsecutive missing classes for the domain");
  // Sets of n non-adjacent items out of s correspond one-to-one to n-subsets of
  // {0 .. s-n}: shift the k-th smallest element by k.
  std::vector<int> slots(static_cast<std::size_t>(s - n_missing + 1));
  for (std::size_t k = 0; k < slots.size(); ++k) slots[k] = static_cast<int>(k);
  std::shuffle(slots.begin(), slots.end(), rng);
  slots.resize(static_cast<std::size_t>(n_missing));
  std::sort(slots.begin(), slots.end());
  for (int k = 0; k < n_missing; ++k) out.push_back(static_cast<ClassIndex>(slots[k] + k));
  return out;
}

StreamPrediction predict_stream(const EmbeddingModel& model, const EmbeddingStore& store,
                                std::span<const Segment> test, const LabelSpace& space, Predictor predictor,
                                const ClassifyOptions& options) {
  StreamPrediction out;
  out.labels.reserve(test.size());
  if (predictor == Predictor::Interpolation) {
    const auto centroids = interpolate_missing(store, space);
    for (const auto& s : test) out.labels.push_back(baseline_predict(centroids, forward(model, s).values()));
    return out;
  }
  const LabelRankMatrix L(space);
  out.traces.reserve(test.size());
  for (const auto& s : test) {
    out.traces.push_back(classify(store, L, forward(model, s).values(), space, options));
    out.labels.push_back(out.traces.back().label);
  }
  return out;
}

double Scores::overall_accuracy() const {
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

double Scores::missing_accuracy() const {
  return missing_total == 0 ? 0.0 : static_cast<double>(missing_correct) / static_cast<double>(missing_total);
}

Scores score(std::span<const ClassIndex> truth, std::span<const ClassIndex> predicted, const LabelSpace& space) {
  if (truth.size() != predicted.size()) throw Error("truth and predictions differ in length");
  Scores s;
  s.confusion.assign(space.size(), std::vector<std::size_t>(space.size(), 0));
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const auto y = truth[k];
    const auto p = predicted[k];
    if (y >= space.size() || p >= space.size()) throw Error("label outside the domain");
    ++s.confusion[y][p];
    ++s.total;
    const bool hit = y == p;
    s.correct += hit ? 1 : 0;
    if (space.is_missing(y)) {
      ++s.missing_total;
      s.missing_correct += hit ? 1 : 0;
    }
  }
  return s;
}

Matrix centroid_distances(const EmbeddingStore& store) {
  const auto& cls = store.classes();
  const auto n = static_cast<Eigen::Index>(cls.size());
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = squared_distance(store.centroid(cls[i]), store.centroid(cls[j]));
    }
  }
  return d;
}

double order_preservation(const EmbeddingStore& store, const LabelSpace& space) {
  const auto& cls = store.classes();
  const Matrix d = centroid_distances(store);
  std::vector<double> feature, label;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    for (std::size_t j = i + 1; j < cls.size(); ++j) {
      feature.push_back(d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      label.push_back(space.distance(cls[i], cls[j]));
    }
  }
  if (feature.size() < 2) return 0.0;
  return spearman_rho(feature, label);
}

Interval normal_interval(std::span<const double> values) {
  Interval out;
  if (values.empty()) return out;
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double stderr_ = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  out.low = out.mean - 1.96 * stderr_;
  out.high = out.mean + 1.96 * stderr_;
  return out;
}

const RepeatResult& ExperimentReport::run(Method method, int repeat) const {
  for (const auto& r : runs) {
    if (r.method == method && r.repeat == repeat) return r;
  }
  throw Error("no run for that method and repeat");
}

const Aggregate& ExperimentReport::aggregate(Method method, int window) const {
  for (const auto& a : aggregates) {
    if (a.method == method && a.window == window) return a;
  }
  throw Error("no aggregate for that method and window");
}

ExperimentReport run_experiment(const ExperimentSpec& spec, std::span<const Segment> dataset,
                                const LabelSpace& space, const ProgressCallback& progress) {
  spec.validate(space.size());
  if (dataset.empty()) throw Error("experiment dataset is empty");
  check_labels(dataset, space);
  std::vector<bool> covered(space.size(), false);
  for (const auto& s : dataset) covered[s.class_index()] = true;
  for (ClassIndex c = 0; c < space.size(); ++c) {
    if (!covered[c]) throw Error("dataset has no segments of class '" + space.id(c) + "'");
  }

  ExperimentReport report;
  report.spec = spec;
  for (ClassIndex c = 0; c < space.size(); ++c) report.class_ids.push_back(space.id(c));
  report.beyond_studied_range = static_cast<double>(spec.n_missing) > 0.4 * static_cast<double>(space.size());

  for (int r = 0; r < spec.n_repeats; ++r) {
    const auto seed = spec.repeat_seed(r);
    std::mt19937_64 rng(seed);
    auto missing = spec.fixed_missing.empty() ? sample_missing_set(spec.protocol, spec.n_missing, space.size(), rng)
                                              : spec.fixed_missing[static_cast<std::size_t>(r)];
    std::sort(missing.begin(), missing.end());
    const auto rspace = space.with_missing(missing);
    const auto split = split_holdout(dataset, spec.test_fraction, missing, seed + 1);
    std::vector<ClassIndex> truth;
    truth.reserve(split.test.size());
    for (const auto& s : split.test) truth.push_back(s.class_index());

    struct Trained {
      EmbeddingModel model;
      EmbeddingStore store;
      double final_loss;
    };
    std::map<LossKind, Trained> trained;
    for (auto method : spec.methods) {
      const auto kind = loss_for(method);
      if (trained.count(kind)) continue;
      if (progress) {
        std::ostringstream msg;
        msg << "repeat " << r << ": training " << to_string(kind) << " encoder, missing {";
        for (std::size_t k = 0; k < missing.size(); ++k) msg << (k ? "," : "") << space.id(missing[k]);
        msg << "}";
        progress(msg.str());
      }
      auto enc = spec.encoder;
      enc.seed = seed + 2;
      auto tcfg = spec.train;
      tcfg.seed = seed + 3;
      tcfg.loss_kind = kind;
      auto result = train(init_model(enc), split.train, tcfg, rspace);
      auto store = build_store(result.model, split.train, rspace);
      trained.emplace(kind, Trained{std::move(result.model), std::move(store), result.report.epochs.back().mean_loss});
    }

    for (auto method : spec.methods) {
      const auto& t = trained.at(loss_for(method));
      ClassifyOptions options;
      options.stat = spec.stat;
      options.test.alpha = spec.alpha;
      const auto predictor = method == Method::TripletInterpolation ? Predictor::Interpolation : Predictor::RankTest;
      const auto predicted = predict_stream(t.model, t.store, split.test, rspace, predictor, options);

      RepeatResult rr;
      rr.method = method;
      rr.repeat = r;
      rr.seed = seed;
      rr.missing = missing;
      rr.centroid_distances = centroid_distances(t.store);
      rr.order_preservation = order_preservation(t.store, rspace);
      rr.final_train_loss = t.final_loss;
      for (auto w : spec.window_sizes) {
        const auto corrected = window_correct(predicted.labels, static_cast<std::size_t>(w));
        rr.windows.push_back({w, score(truth, corrected, rspace)});
      }
      report.runs.push_back(std::move(rr));
    }
  }

  for (auto method : spec.methods) {
    for (std::size_t wi = 0; wi < spec.window_sizes.size(); ++wi) {
      std::vector<double> missing_acc, overall_acc;
      for (const auto& rr : report.runs) {
        if (rr.method != method) continue;
        missing_acc.push_back(rr.windows[wi].scores.missing_accuracy());
        overall_acc.push_back(rr.windows[wi].scores.overall_accuracy());
      }
      report.aggregates.push_back(
          {method, spec.window_sizes[wi], normal_interval(missing_acc), normal_interval(overall_acc)});
    }
  }
  return report;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << std::setprecision(12);
  return out;
}

std::string missing_ids(const ExperimentReport& report, const std::vector<ClassIndex>& missing) {
  std::string s;
  for (std::size_t k = 0; k < missing.size(); ++k) s += (k ? ";" : "") + report.class_ids[missing[k]];
  return s;
}

}  // namespace

void emit_reports(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw Error("cannot create output directory '" + out_dir.string() + "'");
  }

  std::vector<ClassInfo> domain;
  for (std::size_t c = 0; c < report.class_ids.size(); ++c) {
    domain.push_back({report.class_ids[c], static_cast<int>(c)});
  }
  const LabelSpace ids_only(domain, {});

  Json summary;
  summary["spec"] = to_json(report.spec, ids_only);
  summary["classes"] = report.class_ids;
  summary["beyond_studied_range"] = report.beyond_studied_range;
  Json runs = Json::array();
  for (const auto& rr : report.runs) {
    Json jr;
    jr["method"] = std::string(to_string(rr.method));
    jr["repeat"] = rr.repeat;
    jr["seed"] = rr.seed;
    Json missing = Json::array();
    for (auto c : rr.missing) missing.push_back(report.class_ids[c]);
    jr["missing"] = missing;
    jr["order_preservation"] = rr.order_preservation;
    jr["final_train_loss"] = rr.final_train_loss;
    Json windows = Json::array();
    for (const auto& w : rr.windows) {
      windows.push_back({{"window", w.window},
                         {"missing_accuracy", w.scores.missing_accuracy()},
                         {"overall_accuracy", w.scores.overall_accuracy()},
                         {"total", w.scores.total},
                         {"correct", w.scores.correct},
                         {"missing_total", w.scores.missing_total},
                         {"missing_correct", w.scores.missing_correct}});
    }
    jr["windows"] = windows;
    runs.push_back(jr);
  }
  summary["runs"] = runs;
  Json aggregates = Json::array();
  for (const auto& a : report.aggregates) {
    aggregates.push_back({{"method", std::string(to_string(a.method))},
                          {"window", a.window},
                          {"missing_accuracy", {{"mean", a.missing_accuracy.mean},
                                                {"ci_low", a.missing_accuracy.low},
                                                {"ci_high", a.missing_accuracy.high}}},
                          {"overall_accuracy", {{"mean", a.overall_accuracy.mean},
                                                {"ci_low", a.overall_accuracy.low},
                                                {"ci_high", a.overall_accuracy.high}}}});
  }
  summary["aggregates"] = aggregates;
  write_json_file(summary, out_dir / "summary.json");

  {
    auto out = open_for_write(out_dir / "repeats.csv");
    out << "method,repeat,seed,missing,window,missing_accuracy,overall_accuracy,order_preservation\n";
    for (const auto& rr : report.runs) {
      for (const auto& w : rr.windows) {
        out << to_string(rr.method) << ',' << rr.repeat << ',' << rr.seed << ',' << missing_ids(report, rr.missing)
            << ',' << w.window << ',' << w.scores.missing_accuracy() << ',' << w.scores.overall_accuracy() << ','
            << rr.order_preservation << '\n';
      }
    }
  }

  for (const auto& rr : report.runs) {
    const std::string stem = std::string(to_string(rr.method)) + "_r" + std::to_string(rr.repeat);
    for (const auto& w : rr.windows) {
      auto out = open_for_write(out_dir / ("confusion_" + stem + "_w" + std::to_string(w.window) + ".csv"));
      out << "true\\predicted";
      for (const auto& id : report.class_ids) out << ',' << id;
      out << '\n';
      for (std::size_t y = 0; y < report.class_ids.size(); ++y) {
        out << report.class_ids[y];
        for (auto n : w.scores.confusion[y]) out << ',' << n;
        out << '\n';
      }
    }
    std::vector<ClassIndex> present;
    for (ClassIndex c = 0; c < report.class_ids.size(); ++c) {
      if (std::find(rr.missing.begin(), rr.missing.end(), c) == rr.missing.end()) present.push_back(c);
    }
    auto out = open_for_write(out_dir / ("distances_" + stem + ".csv"));
    out << "class";
    for (auto c : present) out << ',' << report.class_ids[c];
    out << '\n';
    for (std::size_t i = 0; i < present.size(); ++i) {
      out << report.class_ids[present[i]];
      for (std::size_t j = 0; j < present.size(); ++j) {
        out << ',' << rr.centroid_distances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
      out << '\n';
    }
  }
}

std::string_view to_string(Protocol protocol) {
  return protocol == Protocol::Nonconsecutive ? "nonconsecutive" : "consecutive";
}

Protocol protocol_from_string(std::string_view name) {
  if (name == "nonconsecutive") return Protocol::Nonconsecutive;
  if (name == "consecutive") return Protocol::Consecutive;
  throw Error("unknown protocol '" + std::string(name) + "'");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::OursOQ: return "oq_test";
    case Method::TripletInterpolation: return "triplet_interpolation";
    case Method::TripletWithTest: return "triplet_test";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  if (name == "oq_test" || name == "oq") return Method::OursOQ;
  if (name == "triplet_interpolation") return Method::TripletInterpolation;
  if (name == "triplet_test") return Method::TripletWithTest;
  throw Error("unknown method '" + std::string(name) + "'");
}

LossKind loss_for(Method method) {
  return method == Method::OursOQ ? LossKind::OrdinalQuadruplet : LossKind::TripletOnly;
}

}  // namespace ordinal
