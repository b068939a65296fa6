// ordinal: command-line front end for the ordinal missing-class pipeline.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ordinal/data.hpp"
#include "ordinal/error.hpp"
#include "ordinal/harness.hpp"
#include "ordinal/io.hpp"

namespace fs = std::filesystem;
using namespace ordinal;

namespace {

struct StreamFlags {
  std::string data;
  std::string labels;
  std::vector<std::string> missing;
  bool missing_set = false;
  StreamSpec stream;
};

void add_stream_flags(CLI::App* app, StreamFlags& f, bool data_required = true) {
  auto* d = app->add_option("--data", f.data, "CSV stream with a header row");
  if (data_required) d->required();
  app->add_option("--labels", f.labels, "label space JSON")->required();
  app->add_option("--missing", f.missing, "ids of missing classes (overrides the label space file)")
      ->each([&f](const std::string&) { f.missing_set = true; });
  app->add_option("--label-column", f.stream.label_column, "name of the label column");
  app->add_option("--feature-columns", f.stream.feature_columns, "feature columns (default: all but the label)");
  app->add_option("--window-length", f.stream.window_length, "segment length T");
  app->add_option("--stride", f.stream.stride, "window stride (0: non-overlapping)");
}

LabelSpace resolve_space(const StreamFlags& f) {
  auto space = load_label_space(f.labels);
  if (!f.missing_set) return space;
  std::vector<ClassIndex> missing;
  for (const auto& id : f.missing) missing.push_back(space.index_of(id));
  return space.with_missing(missing);
}

Json stream_json(const StreamFlags& f) {
  return {{"data", f.data},
          {"labels", f.labels},
          {"label_column", f.stream.label_column},
          {"feature_columns", f.stream.feature_columns},
          {"window_length", f.stream.window_length},
          {"stride", f.stream.effective_stride()}};
}

struct EncoderFlags {
  std::string kind = "birnn";
  EncoderConfig cfg;
};

void add_encoder_flags(CLI::App* app, EncoderFlags& f) {
  app->add_option("--encoder", f.kind, "birnn | meanpool_mlp");
  app->add_option("--hidden-dim", f.cfg.hidden_dim, "hidden width H");
  app->add_option("--embed-dim", f.cfg.embed_dim, "embedding width E");
  app->add_option("--init-seed", f.cfg.seed, "weight initialisation seed");
}

struct TrainFlags {
  std::string loss = "ordinal_quadruplet";
  std::string optimizer = "adam";
  TrainConfig cfg;
};

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--loss", f.loss, "ordinal_quadruplet | triplet");
  app->add_option("--optimizer", f.optimizer, "adam | sgd");
  app->add_option("--epochs", f.cfg.epochs, "training epochs");
  app->add_option("--batch-size", f.cfg.batch_size, "segments per batch");
  app->add_option("--learning-rate", f.cfg.learning_rate, "step size");
  app->add_option("--margin", f.cfg.loss_cfg.margin, "triplet margin");
  app->add_option("--max-per-anchor", f.cfg.max_per_anchor, "tuples drawn per anchor");
  app->add_option("--seed", f.cfg.seed, "batch sampling seed");
}

TrainConfig resolve_train(const TrainFlags& f) {
  auto cfg = f.cfg;
  cfg.loss_kind = loss_kind_from_string(f.loss);
  cfg.optimizer = optimizer_from_string(f.optimizer);
  cfg.validate();
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw Error("cannot create output directory '" + dir.string() + "'");
}

std::vector<Segment> present_only(std::vector<Segment> segments, const LabelSpace& space) {
  std::size_t dropped = 0;
  std::vector<Segment> kept;
  kept.reserve(segments.size());
  for (auto& s : segments) {
    if (space.is_missing(s.class_index())) {
      ++dropped;
    } else {
      kept.push_back(std::move(s));
    }
  }
  if (dropped > 0) std::cerr << "note: dropped " << dropped << " training segments of missing classes\n";
  return kept;
}

int run_generate(const SyntheticConfig& flags, const std::string& config_path, const fs::path& out) {
  auto cfg = flags;
  if (!config_path.empty()) cfg = synthetic_config_from_json(read_json_file(config_path), cfg);
  cfg.validate();
  const auto segments = generate(cfg);
  const auto space = LabelSpace::numbered(cfg.n_classes);
  const auto dir = out.parent_path().empty() ? fs::path(".") : out.parent_path();
  ensure_dir(dir);
  write_csv(out, segments, space);
  save_label_space(space, dir / (out.stem().string() + ".labels.json"));
  write_json_file(to_json(cfg), dir / (out.stem().string() + ".config.json"));
  std::cout << "wrote " << segments.size() << " segments (" << cfg.n_classes << " classes) to " << out.string()
            << "\n";
  return 0;
}

EncoderConfig resolve_encoder(const EncoderFlags& f, const std::vector<Segment>& data, int window_length) {
  auto cfg = f.cfg;
  cfg.kind = encoder_kind_from_string(f.kind);
  cfg.window_length = window_length;
  cfg.n_channels = data.empty() ? 1 : static_cast<int>(data.front().n_channels());
  cfg.validate();
  return cfg;
}

int run_train(const StreamFlags& sf, const EncoderFlags& ef, const TrainFlags& tf, const fs::path& out) {
  const auto space = resolve_space(sf);
  const auto data = present_only(ingest_csv(sf.data, sf.stream, space), space);
  if (data.empty()) throw Error("no training segments of present classes");
  const auto enc = resolve_encoder(ef, data, sf.stream.window_length);
  const auto tcfg = resolve_train(tf);
  ensure_dir(out);

  Json config = {{"stream", stream_json(sf)}, {"label_space", to_json(space)},
                 {"encoder", to_json(enc)},   {"train", to_json(tcfg)}};
  write_json_file(config, out / "train.config.json");

  std::ofstream log(out / "train_log.jsonl", std::ios::trunc);
  if (!log) throw Error("cannot write the training log");
  auto result = train(init_model(enc), data, tcfg, space, [&](const EpochStats& s) {
    log << to_json(s).dump() << '\n';
    log.flush();
    std::cerr << "epoch " << s.epoch << "  loss " << s.mean_loss << "  (" << s.seconds << " s)\n";
  });
  save_model(result.model, out / "model.bin");
  save_model_sidecar(result.model, out / "model.json");
  const auto store = build_store(result.model, data, space);
  std::cout << "trained on " << data.size() << " segments; order preservation "
            << order_preservation(store, space) << "\n";
  return 0;
}

int run_gradcheck(const StreamFlags& sf, const EncoderFlags& ef, const TrainFlags& tf, double tolerance,
                  const std::string& out) {
  const auto space = resolve_space(sf);
  const auto data = present_only(ingest_csv(sf.data, sf.stream, space), space);
  if (data.empty()) throw Error("no segments of present classes");
  const auto enc = resolve_encoder(ef, data, sf.stream.window_length);
  const auto tcfg = resolve_train(tf);
  const double err = grad_check(init_model(enc), data, tcfg, space);
  const bool ok = err < tolerance;
  std::cout << "max relative error " << std::setprecision(6) << err << (ok ? "  ok" : "  FAILED") << "\n";
  if (!out.empty()) {
    ensure_dir(out);
    write_json_file({{"stream", stream_json(sf)},
                     {"encoder", to_json(enc)},
                     {"train", to_json(tcfg)},
                     {"tolerance", tolerance},
                     {"max_relative_error", err}},
                    fs::path(out) / "gradcheck.json");
  }
  return ok ? 0 : 1;
}

struct PredictFlags {
  std::string model;
  std::string train_data;
  std::string method = "test";
  double alpha = 0.05;
  std::string stat = "kendall_tau_b";
  int k = 1;
  int window = 0;
};

int run_predict(const StreamFlags& sf, const PredictFlags& pf, const fs::path& out) {
  const auto space = resolve_space(sf);
  const auto model = load_model(pf.model);
  const auto train_data = present_only(ingest_csv(pf.train_data, sf.stream, space), space);
  const auto test = ingest_csv(sf.data, sf.stream, space);
  if (pf.window < 0) throw Error("--window must be >= 0");
  const auto store = build_store(model, train_data, space);

  ClassifyOptions options;
  options.stat = rank_stat_from_string(pf.stat);
  options.test.alpha = pf.alpha;
  options.k = pf.k;
  Predictor predictor;
  if (pf.method == "test") {
    predictor = Predictor::RankTest;
  } else if (pf.method == "interpolation") {
    predictor = Predictor::Interpolation;
  } else {
    throw Error("unknown --method '" + pf.method + "' (test | interpolation)");
  }
  const auto pred = predict_stream(model, store, test, space, predictor, options);
  const auto corrected = window_correct(pred.labels, static_cast<std::size_t>(pf.window));
  ensure_dir(out);

  write_json_file({{"stream", stream_json(sf)},
                   {"train_data", pf.train_data},
                   {"model", pf.model},
                   {"label_space", to_json(space)},
                   {"method", pf.method},
                   {"alpha", pf.alpha},
                   {"rank_statistic", std::string(to_string(options.stat))},
                   {"k", pf.k},
                   {"window", pf.window}},
                  out / "predict.config.json");
  {
    std::ofstream csv(out / "predictions.csv", std::ios::trunc);
    csv << "source_index,true,predicted,corrected\n";
    for (std::size_t k = 0; k < test.size(); ++k) {
      csv << test[k].source_index() << ',' << space.id(test[k].class_index()) << ',' << space.id(pred.labels[k])
          << ',' << space.id(corrected[k]) << '\n';
    }
  }
  if (!pred.traces.empty()) {
    std::ofstream jsonl(out / "traces.jsonl", std::ios::trunc);
    for (std::size_t k = 0; k < test.size(); ++k) {
      auto j = to_json(pred.traces[k], space);
      j["source_index"] = test[k].source_index();
      j["corrected"] = space.id(corrected[k]);
      jsonl << j.dump() << '\n';
    }
  }
  std::vector<ClassIndex> truth;
  for (const auto& s : test) truth.push_back(s.class_index());
  const auto sc = score(truth, corrected, space);
  std::cout << "predicted " << test.size() << " segments; accuracy " << sc.overall_accuracy()
            << ", missing-class accuracy " << sc.missing_accuracy() << "\n";
  return 0;
}

int run_experiment_cmd(const std::string& config_path, const std::string& data, const std::string& labels,
                       const std::string& synthetic, const StreamSpec& stream, const fs::path& out) {
  std::vector<Segment> dataset;
  std::optional<LabelSpace> space;
  Json source;
  if (!synthetic.empty()) {
    const auto cfg = synthetic_config_from_json(read_json_file(synthetic));
    dataset = generate(cfg);
    space = LabelSpace::numbered(cfg.n_classes);
    source = {{"synthetic", to_json(cfg)}};
  } else {
    if (data.empty() || labels.empty()) throw Error("experiment needs --synthetic or both --data and --labels");
    space = load_label_space(labels).with_missing({});
    dataset = ingest_csv(data, stream, *space);
    source = {{"data", data},
              {"labels", labels},
              {"label_column", stream.label_column},
              {"window_length", stream.window_length},
              {"stride", stream.effective_stride()}};
  }
  auto spec = experiment_spec_from_json(read_json_file(config_path), *space);
  spec.encoder.n_channels = static_cast<int>(dataset.front().n_channels());
  spec.encoder.window_length = static_cast<int>(dataset.front().window_length());
  ensure_dir(out);
  write_json_file({{"source", source}, {"label_space", to_json(*space)}, {"experiment", to_json(spec, *space)}},
                  out / "experiment.config.json");
  const auto report = run_experiment(spec, dataset, *space, [](const std::string& m) { std::cerr << m << "\n"; });
  emit_reports(report, out);
  if (report.beyond_studied_range) std::cerr << "note: more than 40% of the classes are missing\n";
  for (const auto& a : report.aggregates) {
    std::cout << std::left << std::setw(24) << to_string(a.method) << " w=" << std::setw(4) << a.window
              << " missing " << std::fixed << std::setprecision(3) << a.missing_accuracy.mean << " ["
              << a.missing_accuracy.low << ", " << a.missing_accuracy.high << "]  overall "
              << a.overall_accuracy.mean << " [" << a.overall_accuracy.low << ", " << a.overall_accuracy.high
              << "]\n";
  }
  return 0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

int run_report(const std::string& predictions, const std::string& labels, const std::vector<std::string>& missing,
               const std::string& column, const fs::path& out) {
  auto space = load_label_space(labels);
  if (!missing.empty()) {
    std::vector<ClassIndex> idx;
    for (const auto& id : missing) idx.push_back(space.index_of(id));
    space = space.with_missing(idx);
  }
  std::ifstream in(predictions);
  if (!in) throw Error("cannot open '" + predictions + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error("'" + predictions + "' is empty");
  const auto header = split_csv_line(line);
  const auto find = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error("predictions file has no '" + name + "' column");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto truth_col = find("true");
  const auto pred_col = find(column);
  std::vector<ClassIndex> truth, pred;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw Error("malformed predictions row: " + line);
    truth.push_back(space.index_of(cells[truth_col]));
    pred.push_back(space.index_of(cells[pred_col]));
  }
  const auto sc = score(truth, pred, space);
  ensure_dir(out);
  {
    std::ofstream csv(out / "confusion.csv", std::ios::trunc);
    csv << "true\\predicted";
    for (ClassIndex c = 0; c < space.size(); ++c) csv << ',' << space.id(c);
    csv << '\n';
    for (ClassIndex y = 0; y < space.size(); ++y) {
      csv << space.id(y);
      for (auto n : sc.confusion[y]) csv << ',' << n;
      csv << '\n';
    }
  }
  Json per_class = Json::object();
  for (ClassIndex y = 0; y < space.size(); ++y) {
    std::size_t n = 0;
    for (auto v : sc.confusion[y]) n += v;
    per_class[space.id(y)] = {{"count", n},
                              {"accuracy", n == 0 ? 0.0 : static_cast<double>(sc.confusion[y][y]) / n},
                              {"missing", space.is_missing(y)}};
  }
  write_json_file({{"predictions", predictions},
                   {"column", column},
                   {"label_space", to_json(space)},
                   {"total", sc.total},
                   {"overall_accuracy", sc.overall_accuracy()},
                   {"missing_total", sc.missing_total},
                   {"missing_accuracy", sc.missing_accuracy()},
                   {"per_class", per_class}},
                  out / "report.json");
  std::cout << "accuracy " << sc.overall_accuracy() << " over " << sc.total << " segments; missing-class accuracy "
            << sc.missing_accuracy() << " over " << sc.missing_total << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ordinal time-series classification with missing classes"};
  app.require_subcommand(1);

  SyntheticConfig gen_cfg;
  std::string gen_config, gen_out = "synthetic.csv";
  auto* gen = app.add_subcommand("generate", "write a synthetic AR(1) ordinal stream as CSV");
  gen->add_option("--config", gen_config, "synthetic config JSON; keys present override the flags");
  gen->add_option("--classes", gen_cfg.n_classes, "number of ordinal classes");
  gen->add_option("--channels", gen_cfg.n_channels, "channels per time step");
  gen->add_option("--segment-length", gen_cfg.segment_length, "time steps per segment");
  gen->add_option("--segments-per-class", gen_cfg.segments_per_class, "segments per class");
  gen->add_option("--separation", gen_cfg.class_separation, "mean shift per ordinal step");
  gen->add_option("--ar", gen_cfg.ar_coefficient, "AR(1) coefficient");
  gen->add_option("--noise", gen_cfg.noise_std, "innovation standard deviation");
  gen->add_option("--run-length", gen_cfg.run_length, "segments per label-constant run (0: one run per class)");
  gen->add_option("--seed", gen_cfg.seed, "generator seed");
  gen->add_option("--out", gen_out, "output CSV path");

  StreamFlags train_stream;
  EncoderFlags train_enc;
  TrainFlags train_flags;
  std::string train_out = "model";
  auto* tr = app.add_subcommand("train", "train an encoder on present-class segments");
  add_stream_flags(tr, train_stream);
  add_encoder_flags(tr, train_enc);
  add_train_flags(tr, train_flags);
  tr->add_option("--out", train_out, "output directory");

  StreamFlags gc_stream;
  EncoderFlags gc_enc;
  TrainFlags gc_flags;
  double gc_tol = 1e-4;
  std::string gc_out;
  gc_flags.cfg.batch_size = 16;
  gc_enc.cfg.hidden_dim = 4;
  gc_enc.cfg.embed_dim = 3;
  auto* gc = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients on one batch");
  add_stream_flags(gc, gc_stream);
  add_encoder_flags(gc, gc_enc);
  add_train_flags(gc, gc_flags);
  gc->add_option("--tolerance", gc_tol, "maximum accepted relative error");
  gc->add_option("--out", gc_out, "optional output directory");

  StreamFlags pr_stream;
  PredictFlags pr_flags;
  std::string pr_out = "predictions";
  auto* pr = app.add_subcommand("predict", "classify a test stream and write per-segment traces");
  add_stream_flags(pr, pr_stream);
  pr->add_option("--model", pr_flags.model, "model.bin written by train")->required();
  pr->add_option("--train-data", pr_flags.train_data, "training CSV used to build the centroid store")->required();
  pr->add_option("--method", pr_flags.method, "test | interpolation");
  pr->add_option("--alpha", pr_flags.alpha, "type-I error of the missing-class test");
  pr->add_option("--stat", pr_flags.stat, "kendall_tau_b | spearman_rho");
  pr->add_option("--k", pr_flags.k, "neighbours for the present-class branch");
  pr->add_option("--window", pr_flags.window, "window correction size (0: off)");
  pr->add_option("--out", pr_out, "output directory");

  std::string ex_config, ex_data, ex_labels, ex_synthetic, ex_out = "experiment";
  StreamSpec ex_stream;
  auto* ex = app.add_subcommand("experiment", "run a seeded missing-class experiment and write reports");
  ex->add_option("--config", ex_config, "experiment spec JSON")->required();
  ex->add_option("--synthetic", ex_synthetic, "synthetic config JSON used as the dataset");
  ex->add_option("--data", ex_data, "CSV dataset (instead of --synthetic)");
  ex->add_option("--labels", ex_labels, "label space JSON for --data");
  ex->add_option("--label-column", ex_stream.label_column, "name of the label column");
  ex->add_option("--window-length", ex_stream.window_length, "segment length T");
  ex->add_option("--stride", ex_stream.stride, "window stride (0: non-overlapping)");
  ex->add_option("--out", ex_out, "output directory");

  std::string rp_predictions, rp_labels, rp_column = "corrected", rp_out = "report";
  std::vector<std::string> rp_missing;
  auto* rp = app.add_subcommand("report", "confusion matrix and accuracies from a predictions CSV");
  rp->add_option("--predictions", rp_predictions, "predictions.csv written by predict")->required();
  rp->add_option("--labels", rp_labels, "label space JSON")->required();
  rp->add_option("--missing", rp_missing, "ids of missing classes (overrides the label space file)");
  rp->add_option("--column", rp_column, "predicted | corrected");
  rp->add_option("--out", rp_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return run_generate(gen_cfg, gen_config, gen_out);
    if (*tr) return run_train(train_stream, train_enc, train_flags, train_out);
    if (*gc) return run_gradcheck(gc_stream, gc_enc, gc_flags, gc_tol, gc_out);
    if (*pr) return run_predict(pr_stream, pr_flags, pr_out);
    if (*ex) return run_experiment_cmd(ex_config, ex_data, ex_labels, ex_synthetic, ex_stream, ex_out);
    if (*rp) return run_report(rp_predictions, rp_labels, rp_missing, rp_column, rp_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
