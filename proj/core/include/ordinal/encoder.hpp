#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "ordinal/types.hpp"

namespace ordinal {

enum class EncoderKind : std::int32_t {
  BiRecurrent = 0,
  MeanPoolMLP = 1,
};

struct EncoderConfig {
  EncoderKind kind = EncoderKind::BiRecurrent;
  int n_channels = 1;
  int hidden_dim = 256;
  int embed_dim = 256;
  int window_length = 10;
  std::uint64_t seed = 0;

  void validate() const;

  /// Number of weights and biases implied by the shape.
  [[nodiscard]] std::size_t parameter_count() const;
};

/// Encoder weights as one flat vector.
///
/// Canonical parameter order (all matrices row-major, rows = outputs):
///
///   BiRecurrent:  Wx_fwd (H x C), Wh_fwd (H x H), b_fwd (H),
///                 Wx_bwd (H x C), Wh_bwd (H x H), b_bwd (H),
///                 W_out (E x 2H), b_out (E)
///   MeanPoolMLP:  W1 (H x C), b1 (H), W2 (E x H), b2 (E)
///
/// The same order is used on disk, so models round-trip bit-exactly.
class EmbeddingModel {
 public:
  EmbeddingModel(EncoderConfig config, Vector parameters);

  [[nodiscard]] const EncoderConfig& config() const noexcept { return config_; }
  [[nodiscard]] const Vector& parameters() const noexcept { return params_; }
  [[nodiscard]] Vector& mutable_parameters() noexcept { return params_; }

 private:
  EncoderConfig config_;
  Vector params_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer, deterministic in config.seed.
/// fan_in is C + H for a recurrent cell, 2H for the recurrent output layer,
/// and the layer input width for the MLP.
[[nodiscard]] EmbeddingModel init_model(const EncoderConfig& config);

/// Pre-normalization output v(x).
[[nodiscard]] Vector forward_raw(const EmbeddingModel& model, const Matrix& values);

/// f(x) = v(x) / ||v(x)||. Throws on a zero pre-normalization vector.
[[nodiscard]] FeatureVector forward(const EmbeddingModel& model, const Segment& segment);
[[nodiscard]] FeatureVector forward(const EmbeddingModel& model, const Matrix& values);

/// Gradient of output_gradient . f(x) with respect to every parameter, in
/// canonical order. Recomputes the forward pass.
[[nodiscard]] Vector backward(const EmbeddingModel& model, const Segment& segment,
                              const Vector& output_gradient);
[[nodiscard]] Vector backward(const EmbeddingModel& model, const Matrix& values,
                              const Vector& output_gradient);

// Persistence. Binary layout (little-endian):
//   char[8]  magic "ORDENC\0\1"
//   uint32   format version (1)
//   int32    kind, n_channels, hidden_dim, embed_dim, window_length
//   uint64   seed
//   uint64   parameter count P
//   float64  parameters[P]
void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
[[nodiscard]] EmbeddingModel load_model(const std::filesystem::path& path);

/// Human-readable config sidecar (JSON).
void save_model_sidecar(const EmbeddingModel& model, const std::filesystem::path& path);

[[nodiscard]] std::string_view to_string(EncoderKind kind);
[[nodiscard]] EncoderKind encoder_kind_from_string(std::string_view name);

}  // namespace ordinal
