#include "ordinal/io.hpp"

#include <fstream>

#include "ordinal/error.hpp"

namespace ordinal {

namespace {

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(std::string("config key '") + key + "' has the wrong type");
  }
}

std::string read_string(const Json& j, const char* key) {
  std::string s;
  read_opt(j, key, s);
  return s;
}

void require_object(const Json& j, const char* what) {
  if (!j.is_object()) throw Error(std::string(what) + " must be a JSON object");
}

}  // namespace

Json to_json(const LabelSpace& space) {
  Json j;
  Json classes = Json::array();
  for (ClassIndex c = 0; c < space.size(); ++c) classes.push_back({{"id", space.id(c)}, {"ordinal", space.ordinal(c)}});
  j["classes"] = classes;
  Json missing = Json::array();
  for (auto c : space.missing()) missing.push_back(space.id(c));
  j["missing"] = missing;
  j["label_distance"] = std::string(to_string(space.kind()));
  if (space.kind() == LabelDistanceKind::Custom) {
    const auto k = space.size();
    Json rows = Json::array();
    for (std::size_t i = 0; i < k; ++i) {
      rows.push_back(std::vector<double>(space.custom_table().begin() + static_cast<std::ptrdiff_t>(i * k),
                                         space.custom_table().begin() + static_cast<std::ptrdiff_t>((i + 1) * k)));
    }
    j["custom_table"] = rows;
  }
  return j;
}

LabelSpace label_space_from_json(const Json& j) {
  require_object(j, "label space");
  const auto it = j.find("classes");
  if (it == j.end() || !it->is_array()) throw Error("label space needs a 'classes' array");
  std::vector<ClassInfo> classes;
  for (const auto& c : *it) {
    if (!c.is_object() || !c.contains("id") || !c.contains("ordinal")) {
      throw Error("each class needs 'id' and 'ordinal'");
    }
    try {
      classes.push_back({c.at("id").get<std::string>(), c.at("ordinal").get<int>()});
    } catch (const nlohmann::json::exception&) {
      throw Error("class entries need a string id and an integer ordinal");
    }
  }
  std::vector<std::string> missing;
  read_opt(j, "missing", missing);
  auto kind = LabelDistanceKind::Absolute;
  if (const auto name = read_string(j, "label_distance"); !name.empty()) kind = label_distance_from_string(name);
  std::vector<std::vector<double>> rows;
  read_opt(j, "custom_table", rows);
  std::vector<double> table;
  for (const auto& r : rows) {
    if (r.size() != rows.size()) throw Error("custom_table must be square");
    table.insert(table.end(), r.begin(), r.end());
  }
  return LabelSpace(std::move(classes), missing, kind, std::move(table));
}

LabelSpace load_label_space(const std::filesystem::path& path) { return label_space_from_json(read_json_file(path)); }

void save_label_space(const LabelSpace& space, const std::filesystem::path& path) {
  write_json_file(to_json(space), path);
}

Json to_json(const EncoderConfig& cfg) {
  return {{"kind", std::string(to_string(cfg.kind))}, {"n_channels", cfg.n_channels},
          {"hidden_dim", cfg.hidden_dim},             {"embed_dim", cfg.embed_dim},
          {"window_length", cfg.window_length},       {"seed", cfg.seed}};
}

EncoderConfig encoder_config_from_json(const Json& j, EncoderConfig base) {
  require_object(j, "encoder config");
  if (const auto name = read_string(j, "kind"); !name.empty()) base.kind = encoder_kind_from_string(name);
  read_opt(j, "n_channels", base.n_channels);
  read_opt(j, "hidden_dim", base.hidden_dim);
  read_opt(j, "embed_dim", base.embed_dim);
  read_opt(j, "window_length", base.window_length);
  read_opt(j, "seed", base.seed);
  base.validate();
  return base;
}

Json to_json(const TrainConfig& cfg) {
  return {{"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"epochs", cfg.epochs},
          {"loss", std::string(to_string(cfg.loss_kind))},
          {"optimizer", std::string(to_string(cfg.optimizer))},
          {"adam", {{"beta1", cfg.adam.beta1}, {"beta2", cfg.adam.beta2}, {"epsilon", cfg.adam.epsilon}}},
          {"seed", cfg.seed},
          {"margin", cfg.loss_cfg.margin},
          {"epsilon_d", cfg.loss_cfg.epsilon_d},
          {"max_per_anchor", cfg.max_per_anchor}};
}

TrainConfig train_config_from_json(const Json& j, TrainConfig base) {
  require_object(j, "training config");
  read_opt(j, "batch_size", base.batch_size);
  read_opt(j, "learning_rate", base.learning_rate);
  read_opt(j, "epochs", base.epochs);
  if (const auto name = read_string(j, "loss"); !name.empty()) base.loss_kind = loss_kind_from_string(name);
  if (const auto name = read_string(j, "optimizer"); !name.empty()) base.optimizer = optimizer_from_string(name);
  if (const auto it = j.find("adam"); it != j.end() && it->is_object()) {
    read_opt(*it, "beta1", base.adam.beta1);
    read_opt(*it, "beta2", base.adam.beta2);
    read_opt(*it, "epsilon", base.adam.epsilon);
  }
  read_opt(j, "seed", base.seed);
  read_opt(j, "margin", base.loss_cfg.margin);
  read_opt(j, "epsilon_d", base.loss_cfg.epsilon_d);
  read_opt(j, "max_per_anchor", base.max_per_anchor);
  base.validate();
  return base;
}

Json to_json(const SyntheticConfig& cfg) {
  return {{"n_classes", cfg.n_classes},
          {"n_channels", cfg.n_channels},
          {"segment_length", cfg.segment_length},
          {"segments_per_class", cfg.segments_per_class},
          {"class_separation", cfg.class_separation},
          {"ar_coefficient", cfg.ar_coefficient},
          {"noise_std", cfg.noise_std},
          {"run_length", cfg.run_length},
          {"seed", cfg.seed}};
}

SyntheticConfig synthetic_config_from_json(const Json& j, SyntheticConfig base) {
  require_object(j, "synthetic config");
  read_opt(j, "n_classes", base.n_classes);
  read_opt(j, "n_channels", base.n_channels);
  read_opt(j, "segment_length", base.segment_length);
  read_opt(j, "segments_per_class", base.segments_per_class);
  read_opt(j, "class_separation", base.class_separation);
  read_opt(j, "ar_coefficient", base.ar_coefficient);
  read_opt(j, "noise_std", base.noise_std);
  read_opt(j, "run_length", base.run_length);
  read_opt(j, "seed", base.seed);
  base.validate();
  return base;
}

Json to_json(const ExperimentSpec& spec, const LabelSpace& space) {
  Json methods = Json::array();
  for (auto m : spec.methods) methods.push_back(std::string(to_string(m)));
  Json fixed = Json::array();
  for (const auto& set : spec.fixed_missing) {
    Json ids = Json::array();
    for (auto c : set) ids.push_back(space.id(c));
    fixed.push_back(ids);
  }
  return {{"protocol", std::string(to_string(spec.protocol))},
          {"n_missing", spec.n_missing},
          {"n_repeats", spec.n_repeats},
          {"window_sizes", spec.window_sizes},
          {"methods", methods},
          {"alpha", spec.alpha},
          {"rank_statistic", std::string(to_string(spec.stat))},
          {"seeds", spec.seeds},
          {"base_seed", spec.base_seed},
          {"test_fraction", spec.test_fraction},
          {"fixed_missing", fixed},
          {"encoder", to_json(spec.encoder)},
          {"train", to_json(spec.train)}};
}

ExperimentSpec experiment_spec_from_json(const Json& j, const LabelSpace& space) {
  require_object(j, "experiment spec");
  ExperimentSpec spec;
  if (const auto name = read_string(j, "protocol"); !name.empty()) spec.protocol = protocol_from_string(name);
  read_opt(j, "n_missing", spec.n_missing);
  read_opt(j, "n_repeats", spec.n_repeats);
  read_opt(j, "window_sizes", spec.window_sizes);
  if (j.contains("methods")) {
    std::vector<std::string> names;
    read_opt(j, "methods", names);
    spec.methods.clear();
    for (const auto& n : names) spec.methods.push_back(method_from_string(n));
  }
  read_opt(j, "alpha", spec.alpha);
  if (const auto name = read_string(j, "rank_statistic"); !name.empty()) spec.stat = rank_stat_from_string(name);
  read_opt(j, "seeds", spec.seeds);
  read_opt(j, "base_seed", spec.base_seed);
  read_opt(j, "test_fraction", spec.test_fraction);
  if (j.contains("fixed_missing")) {
    std::vector<std::vector<std::string>> sets;
    read_opt(j, "fixed_missing", sets);
    for (const auto& set : sets) {
      std::vector<ClassIndex> idx;
      for (const auto& id : set) idx.push_back(space.index_of(id));
      spec.fixed_missing.push_back(std::move(idx));
    }
  }
  if (const auto it = j.find("encoder"); it != j.end()) spec.encoder = encoder_config_from_json(*it, spec.encoder);
  if (const auto it = j.find("train"); it != j.end()) spec.train = train_config_from_json(*it, spec.train);
  spec.validate(space.size());
  return spec;
}

Json to_json(const PredictionTrace& trace, const LabelSpace& space) {
  Json j;
  j["label"] = space.id(trace.label);
  j["branch"] = std::string(to_string(trace.branch));
  j["s1"] = space.id(trace.first);
  j["s2"] = space.id(trace.second);
  j["scores"] = trace.scores;
  j["feature_distances"] = trace.feature_distances;
  j["decision"] = trace.decision ? Json(std::string(to_string(*trace.decision))) : Json(nullptr);
  j["d_te"] = trace.d_te ? Json(*trace.d_te) : Json(nullptr);
  j["threshold"] = trace.threshold ? Json(*trace.threshold) : Json(nullptr);
  j["score_tie"] = trace.score_tie;
  j["degenerate"] = trace.degenerate;
  return j;
}

Json to_json(const EpochStats& stats) {
  return {{"epoch", stats.epoch},
          {"mean_loss", stats.mean_loss},
          {"batches", stats.batches},
          {"quadruplets", stats.quadruplets},
          {"triplets", stats.triplets},
          {"degraded_batches", stats.degraded_batches},
          {"empty_batches", stats.empty_batches},
          {"seconds", stats.seconds}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace ordinal
