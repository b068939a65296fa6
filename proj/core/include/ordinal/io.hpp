#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "ordinal/data.hpp"
#include "ordinal/harness.hpp"

namespace ordinal {

using Json = nlohmann::ordered_json;

// Label space files:
//   {"classes": [{"id": "c1", "ordinal": 1}, ...], "missing": ["c3"],
//    "label_distance": "absolute", "custom_table": [[...], ...]}
[[nodiscard]] Json to_json(const LabelSpace& space);
[[nodiscard]] LabelSpace label_space_from_json(const Json& j);
[[nodiscard]] LabelSpace load_label_space(const std::filesystem::path& path);
void save_label_space(const LabelSpace& space, const std::filesystem::path& path);

// Config objects. Parsers start from the type's defaults and override the
// keys present in the document.
[[nodiscard]] Json to_json(const EncoderConfig& cfg);
[[nodiscard]] EncoderConfig encoder_config_from_json(const Json& j, EncoderConfig base = {});
[[nodiscard]] Json to_json(const TrainConfig& cfg);
[[nodiscard]] TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});
[[nodiscard]] Json to_json(const SyntheticConfig& cfg);
[[nodiscard]] SyntheticConfig synthetic_config_from_json(const Json& j, SyntheticConfig base = {});
[[nodiscard]] Json to_json(const ExperimentSpec& spec, const LabelSpace& space);
/// `space` resolves class ids in "fixed_missing".
[[nodiscard]] ExperimentSpec experiment_spec_from_json(const Json& j, const LabelSpace& space);

/// One record of the prediction trace stream (JSON lines).
[[nodiscard]] Json to_json(const PredictionTrace& trace, const LabelSpace& space);
/// One record of the training log (JSON lines).
[[nodiscard]] Json to_json(const EpochStats& stats);

[[nodiscard]] Json read_json_file(const std::filesystem::path& path);
void write_json_file(const Json& j, const std::filesystem::path& path);

}  // namespace ordinal
