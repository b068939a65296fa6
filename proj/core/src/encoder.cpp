#include "ordinal/encoder.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>

#include "ordinal/error.hpp"

namespace ordinal {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<const RowMatrix>;
using MutMatrixView = Eigen::Map<RowMatrix>;
using VectorView = Eigen::Map<const Vector>;
using MutVectorView = Eigen::Map<Vector>;

// Offsets of every block in the canonical parameter order.
struct RecurrentLayout {
  Eigen::Index c, h, e;
  Eigen::Index wx_f, wh_f, b_f, wx_b, wh_b, b_b, w_out, b_out, total;

  explicit RecurrentLayout(const EncoderConfig& cfg)
      : c(cfg.n_channels), h(cfg.hidden_dim), e(cfg.embed_dim) {
    wx_f = 0;
    wh_f = wx_f + h * c;
    b_f = wh_f + h * h;
    wx_b = b_f + h;
    wh_b = wx_b + h * c;
    b_b = wh_b + h * h;
    w_out = b_b + h;
    b_out = w_out + e * 2 * h;
    total = b_out + e;
  }
};

struct MlpLayout {
  Eigen::Index c, h, e;
  Eigen::Index w1, b1, w2, b2, total;

  explicit MlpLayout(const EncoderConfig& cfg)
      : c(cfg.n_channels), h(cfg.hidden_dim), e(cfg.embed_dim) {
    w1 = 0;
    b1 = w1 + h * c;
    w2 = b1 + h;
    b2 = w2 + e * h;
    total = b2 + e;
  }
};

void check_input(const EncoderConfig& cfg, const Matrix& values) {
  if (values.cols() != cfg.n_channels) {
    throw Error("segment has " + std::to_string(values.cols()) + " channels, encoder expects " +
                std::to_string(cfg.n_channels));
  }
  if (values.rows() != cfg.window_length) {
    throw Error("segment has length " + std::to_string(values.rows()) + ", encoder expects " +
                std::to_string(cfg.window_length));
  }
}

// Hidden states of both directions. fwd[t + 1] is the state after reading
// row t; bwd[t] is the state after reading rows T-1 .. t.
struct RecurrentStates {
  std::vector<Vector> fwd;
  std::vector<Vector> bwd;
  Vector z;
};

RecurrentStates recurrent_states(const Vector& p, const RecurrentLayout& l, const Matrix& x) {
  const Eigen::Index t_len = x.rows();
  const MatrixView wx_f(p.data() + l.wx_f, l.h, l.c);
  const MatrixView wh_f(p.data() + l.wh_f, l.h, l.h);
  const VectorView b_f(p.data() + l.b_f, l.h);
  const MatrixView wx_b(p.data() + l.wx_b, l.h, l.c);
  const MatrixView wh_b(p.data() + l.wh_b, l.h, l.h);
  const VectorView b_b(p.data() + l.b_b, l.h);

  RecurrentStates s;
  s.fwd.assign(t_len + 1, Vector::Zero(l.h));
  s.bwd.assign(t_len + 1, Vector::Zero(l.h));
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const Vector xt = x.row(t).transpose();
    s.fwd[t + 1] = (wx_f * xt + wh_f * s.fwd[t] + b_f).array().tanh();
  }
  for (Eigen::Index t = t_len - 1; t >= 0; --t) {
    const Vector xt = x.row(t).transpose();
    s.bwd[t] = (wx_b * xt + wh_b * s.bwd[t + 1] + b_b).array().tanh();
  }
  s.z.resize(2 * l.h);
  s.z << s.fwd[t_len], s.bwd[0];
  return s;
}

Vector recurrent_output(const Vector& p, const RecurrentLayout& l, const Vector& z) {
  const MatrixView w_out(p.data() + l.w_out, l.e, 2 * l.h);
  const VectorView b_out(p.data() + l.b_out, l.e);
  return w_out * z + b_out;
}

Vector recurrent_backward(const Vector& p, const RecurrentLayout& l, const Matrix& x,
                          const RecurrentStates& s, const Vector& grad_v) {
  const Eigen::Index t_len = x.rows();
  Vector g = Vector::Zero(l.total);

  MutMatrixView(g.data() + l.w_out, l.e, 2 * l.h) = grad_v * s.z.transpose();
  MutVectorView(g.data() + l.b_out, l.e) = grad_v;
  const Vector grad_z = MatrixView(p.data() + l.w_out, l.e, 2 * l.h).transpose() * grad_v;

  {
    const MatrixView wh(p.data() + l.wh_f, l.h, l.h);
    MutMatrixView dwx(g.data() + l.wx_f, l.h, l.c);
    MutMatrixView dwh(g.data() + l.wh_f, l.h, l.h);
    MutVectorView db(g.data() + l.b_f, l.h);
    Vector dh = grad_z.head(l.h);
    for (Eigen::Index t = t_len - 1; t >= 0; --t) {
      const Vector da = dh.array() * (1.0 - s.fwd[t + 1].array().square());
      dwx.noalias() += da * x.row(t);
      dwh.noalias() += da * s.fwd[t].transpose();
      db += da;
      dh = wh.transpose() * da;
    }
  }
  {
    const MatrixView wh(p.data() + l.wh_b, l.h, l.h);
    MutMatrixView dwx(g.data() + l.wx_b, l.h, l.c);
    MutMatrixView dwh(g.data() + l.wh_b, l.h, l.h);
    MutVectorView db(g.data() + l.b_b, l.h);
    Vector dh = grad_z.tail(l.h);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const Vector da = dh.array() * (1.0 - s.bwd[t].array().square());
      dwx.noalias() += da * x.row(t);
      dwh.noalias() += da * s.bwd[t + 1].transpose();
      db += da;
      dh = wh.transpose() * da;
    }
  }
  return g;
}

struct MlpStates {
  Vector pooled;
  Vector hidden;
};

MlpStates mlp_states(const Vector& p, const MlpLayout& l, const Matrix& x) {
  MlpStates s;
  s.pooled = x.colwise().mean().transpose();
  const MatrixView w1(p.data() + l.w1, l.h, l.c);
  const VectorView b1(p.data() + l.b1, l.h);
  s.hidden = (w1 * s.pooled + b1).array().tanh();
  return s;
}

Vector mlp_output(const Vector& p, const MlpLayout& l, const Vector& hidden) {
  const MatrixView w2(p.data() + l.w2, l.e, l.h);
  const VectorView b2(p.data() + l.b2, l.e);
  return w2 * hidden + b2;
}

Vector mlp_backward(const Vector& p, const MlpLayout& l, const MlpStates& s, const Vector& grad_v) {
  Vector g = Vector::Zero(l.total);
  MutMatrixView(g.data() + l.w2, l.e, l.h) = grad_v * s.hidden.transpose();
  MutVectorView(g.data() + l.b2, l.e) = grad_v;
  const Vector grad_h = MatrixView(p.data() + l.w2, l.e, l.h).transpose() * grad_v;
  const Vector da = grad_h.array() * (1.0 - s.hidden.array().square());
  MutMatrixView(g.data() + l.w1, l.h, l.c) = da * s.pooled.transpose();
  MutVectorView(g.data() + l.b1, l.h) = da;
  return g;
}

void fill_uniform(Vector& p, Eigen::Index begin, Eigen::Index count, double fan_in,
                  std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index k = begin; k < begin + count; ++k) p[k] = dist(rng);
}

}  // namespace

void EncoderConfig::validate() const {
  if (n_channels < 1 || hidden_dim < 1 || embed_dim < 1 || window_length < 1) {
    throw Error("encoder dimensions must all be >= 1");
  }
  if (kind != EncoderKind::BiRecurrent && kind != EncoderKind::MeanPoolMLP) {
    throw Error("unknown encoder kind");
  }
}

std::size_t EncoderConfig::parameter_count() const {
  validate();
  if (kind == EncoderKind::BiRecurrent) return static_cast<std::size_t>(RecurrentLayout(*this).total);
  return static_cast<std::size_t>(MlpLayout(*this).total);
}

EmbeddingModel::EmbeddingModel(EncoderConfig config, Vector parameters)
    : config_(config), params_(std::move(parameters)) {
  const auto expected = config_.parameter_count();
  if (static_cast<std::size_t>(params_.size()) != expected) {
    throw Error("parameter vector has " + std::to_string(params_.size()) + " entries, config implies " +
                std::to_string(expected));
  }
}

EmbeddingModel init_model(const EncoderConfig& config) {
  Vector p(static_cast<Eigen::Index>(config.parameter_count()));
  std::mt19937_64 rng(config.seed);
  if (config.kind == EncoderKind::BiRecurrent) {
    const RecurrentLayout l(config);
    const double cell_fan_in = static_cast<double>(l.c + l.h);
    fill_uniform(p, l.wx_f, l.b_b + l.h - l.wx_f, cell_fan_in, rng);
    fill_uniform(p, l.w_out, l.total - l.w_out, static_cast<double>(2 * l.h), rng);
  } else {
    const MlpLayout l(config);
    fill_uniform(p, l.w1, l.w2 - l.w1, static_cast<double>(l.c), rng);
    fill_uniform(p, l.w2, l.total - l.w2, static_cast<double>(l.h), rng);
  }
  return EmbeddingModel(config, std::move(p));
}

Vector forward_raw(const EmbeddingModel& model, const Matrix& values) {
  const auto& cfg = model.config();
  check_input(cfg, values);
  if (cfg.kind == EncoderKind::BiRecurrent) {
    const RecurrentLayout l(cfg);
    const auto s = recurrent_states(model.parameters(), l, values);
    return recurrent_output(model.parameters(), l, s.z);
  }
  const MlpLayout l(cfg);
  const auto s = mlp_states(model.parameters(), l, values);
  return mlp_output(model.parameters(), l, s.hidden);
}

FeatureVector forward(const EmbeddingModel& model, const Matrix& values) {
  return FeatureVector::normalize(forward_raw(model, values));
}

FeatureVector forward(const EmbeddingModel& model, const Segment& segment) {
  return forward(model, segment.values());
}

Vector backward(const EmbeddingModel& model, const Matrix& values, const Vector& output_gradient) {
  const auto& cfg = model.config();
  check_input(cfg, values);
  if (output_gradient.size() != cfg.embed_dim) {
    throw Error("output gradient has dimension " + std::to_string(output_gradient.size()) +
                ", embedding dimension is " + std::to_string(cfg.embed_dim));
  }
  const Vector& p = model.parameters();

  // d f / d v = (I - f f^T) / ||v||
  const auto project = [&](const Vector& v) -> Vector {
    const double n = v.norm();
    if (n == 0.0) throw Error("degenerate embedding: zero vector before normalization");
    const Vector f = v / n;
    return (output_gradient - f * f.dot(output_gradient)) / n;
  };

  if (cfg.kind == EncoderKind::BiRecurrent) {
    const RecurrentLayout l(cfg);
    const auto s = recurrent_states(p, l, values);
    const Vector grad_v = project(recurrent_output(p, l, s.z));
    return recurrent_backward(p, l, values, s, grad_v);
  }
  const MlpLayout l(cfg);
  const auto s = mlp_states(p, l, values);
  const Vector grad_v = project(mlp_output(p, l, s.hidden));
  return mlp_backward(p, l, s, grad_v);
}

Vector backward(const EmbeddingModel& model, const Segment& segment, const Vector& output_gradient) {
  return backward(model, segment.values(), output_gradient);
}

namespace {

constexpr std::array<char, 8> kMagic = {'O', 'R', 'D', 'E', 'N', 'C', '\0', '\1'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) throw Error("model file truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  const auto& c = model.config();
  out.write(kMagic.data(), kMagic.size());
  write_le<std::uint32_t>(out, kFormatVersion);
  write_le<std::int32_t>(out, static_cast<std::int32_t>(c.kind));
  write_le<std::int32_t>(out, c.n_channels);
  write_le<std::int32_t>(out, c.hidden_dim);
  write_le<std::int32_t>(out, c.embed_dim);
  write_le<std::int32_t>(out, c.window_length);
  write_le<std::uint64_t>(out, c.seed);
  write_le<std::uint64_t>(out, static_cast<std::uint64_t>(model.parameters().size()));
  for (Eigen::Index k = 0; k < model.parameters().size(); ++k) write_le<double>(out, model.parameters()[k]);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

EmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path.string() + "'");
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error("'" + path.string() + "' is not an encoder model file");
  }
  const auto version = read_le<std::uint32_t>(in);
  if (version != kFormatVersion) throw Error("unsupported model format version " + std::to_string(version));
  EncoderConfig c;
  c.kind = static_cast<EncoderKind>(read_le<std::int32_t>(in));
  c.n_channels = read_le<std::int32_t>(in);
  c.hidden_dim = read_le<std::int32_t>(in);
  c.embed_dim = read_le<std::int32_t>(in);
  c.window_length = read_le<std::int32_t>(in);
  c.seed = read_le<std::uint64_t>(in);
  c.validate();
  const auto count = read_le<std::uint64_t>(in);
  if (count != c.parameter_count()) throw Error("model file parameter count does not match its config");
  Vector p(static_cast<Eigen::Index>(count));
  for (Eigen::Index k = 0; k < p.size(); ++k) p[k] = read_le<double>(in);
  return EmbeddingModel(c, std::move(p));
}

void save_model_sidecar(const EmbeddingModel& model, const std::filesystem::path& path) {
  const auto& c = model.config();
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = std::string(to_string(c.kind));
  j["n_channels"] = c.n_channels;
  j["hidden_dim"] = c.hidden_dim;
  j["embed_dim"] = c.embed_dim;
  j["window_length"] = c.window_length;
  j["seed"] = c.seed;
  j["parameter_count"] = model.parameters().size();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
}

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::BiRecurrent: return "birnn";
    case EncoderKind::MeanPoolMLP: return "meanpool_mlp";
  }
  return "unknown";
}

EncoderKind encoder_kind_from_string(std::string_view name) {
  if (name == "birnn" || name == "bi_recurrent") return EncoderKind::BiRecurrent;
  if (name == "meanpool_mlp" || name == "mlp") return EncoderKind::MeanPoolMLP;
  throw Error("unknown encoder kind '" + std::string(name) + "'");
}

}  // namespace ordinal
