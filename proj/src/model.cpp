#include "revgen/model.hpp"

#include <cmath>
#include <stdexcept>

namespace revgen {

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.visit([](const std::string&, auto& t) { t.fill(0.0); });
  return z;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  visit([&](const std::string&, const auto& t) { n += t.size(); });
  return n;
}

std::vector<std::span<double>> tensor_views(ModelParams& params) {
  std::vector<std::span<double>> out;
  params.visit([&](const std::string&, auto& t) { out.push_back(t.values()); });
  return out;
}

std::vector<std::span<const double>> tensor_views(const ModelParams& params) {
  std::vector<std::span<const double>> out;
  params.visit([&](const std::string&, const auto& t) { out.push_back(t.values()); });
  return out;
}

Model Model::create(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  const double s = config.init_scale;
  Model m;
  m.config = config;
  m.params.embedding = init_matrix(config.vocab_size, config.embed_dim, s, rng);
  if (config.has_projection()) {
    const double proj_scale = 1.0 / std::sqrt(static_cast<double>(config.raw_feature_dim));
    m.params.projection =
        init_matrix(config.feature_dim, config.raw_feature_dim, proj_scale, rng);
  }
  m.params.lower =
      GLSTMParams::random(config.embed_dim, config.feature_dim, config.rating_dim(), s, rng);
  m.params.decoder = DecoderParams::random(config.embed_dim, config.hidden_dim,
                                           config.guidance_dim(), config.vocab_size, s, rng);
  m.validate();
  return m;
}

Model Model::zeros(const ModelConfig& config) {
  Model m;
  m.config = config;
  m.params.embedding = Matrix(config.vocab_size, config.embed_dim);
  if (config.has_projection()) {
    m.params.projection = Matrix(config.feature_dim, config.raw_feature_dim);
  }
  m.params.lower =
      GLSTMParams::zeros(config.embed_dim, config.feature_dim, config.rating_dim());
  m.params.decoder = DecoderParams::zeros(config.embed_dim, config.hidden_dim,
                                          config.guidance_dim(), config.vocab_size);
  m.validate();
  return m;
}

void Model::validate() const {
  const ModelConfig& c = config;
  if (c.vocab_size < Vocabulary::kNumReserved) {
    throw ConfigError("vocabulary size must be at least 4");
  }
  if (c.embed_dim == 0 || c.feature_dim == 0 || c.hidden_dim == 0 || c.raw_feature_dim == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (params.embedding.rows() != c.vocab_size || params.embedding.cols() != c.embed_dim) {
    throw DimensionError("embedding is " + params.embedding.shape_string() + ", expected " +
                         std::to_string(c.vocab_size) + "x" + std::to_string(c.embed_dim));
  }
  if (c.has_projection()) {
    if (params.projection.rows() != c.feature_dim ||
        params.projection.cols() != c.raw_feature_dim) {
      throw DimensionError("projection is " + params.projection.shape_string() +
                           ", expected " + std::to_string(c.feature_dim) + "x" +
                           std::to_string(c.raw_feature_dim));
    }
  } else if (params.projection.size() != 0) {
    throw DimensionError("projection present but raw and projected feature sizes agree");
  }
  params.lower.validate();
  check_mask_dims(params.lower, c.feature_dim);
  if (params.lower.input_dim() != c.embed_dim ||
      params.lower.guidance_dim() != c.rating_dim()) {
    throw DimensionError("lower gLSTM input/guidance sizes do not match the configuration");
  }
  params.decoder.validate();
  if (params.decoder.cell.input_dim() != c.embed_dim ||
      params.decoder.cell.hidden_dim() != c.hidden_dim ||
      params.decoder.cell.guidance_dim() != c.guidance_dim() ||
      params.decoder.vocab_size() != c.vocab_size) {
    throw DimensionError("decoder sizes do not match the configuration");
  }
}

void Model::zero_guidance_weights() {
  params.lower.zero_guidance_weights();
  params.decoder.cell.zero_guidance_weights();
}

Vector Model::image_feature(const Vector& raw) const {
  if (raw.size() != config.raw_feature_dim) {
    throw DimensionError("image feature has length " + std::to_string(raw.size()) +
                         ", model expects " + std::to_string(config.raw_feature_dim));
  }
  return config.has_projection() ? project_feature(raw, params.projection) : raw;
}

DecodeState Model::initial_state() const {
  return {GLSTMState::zeros(config.feature_dim), GLSTMState::zeros(config.hidden_dim)};
}

Vector Model::embed(TokenId token) const {
  if (token >= config.vocab_size) {
    throw std::out_of_range("token id " + std::to_string(token) + " outside vocabulary of size " +
                            std::to_string(config.vocab_size));
  }
  const auto row = params.embedding.row(token);
  return Vector(std::vector<double>(row.begin(), row.end()));
}

Vector Model::step(DecodeState& state, TokenId token, const Vector& feature,
                   const Vector& rating) const {
  const CellOptions opts = config.cell_options();
  const Vector x = embed(token);
  const Vector mask =
      attention_mask(params.lower, state.lower, x, rating, opts, config.mask_norm);
  const Vector guidance = fuse_guidance(feature, mask, rating);
  auto [probs, next] = decode_step(params.decoder, x, guidance, state.upper, opts);
  state.upper = std::move(next);
  return std::move(probs);
}

std::vector<Vector> rollout(const Model& model, const Vector& feature, const Vector& rating,
                            const std::vector<TokenId>& tokens) {
  if (tokens.empty() || tokens.front() != Vocabulary::kBos) {
    throw std::invalid_argument("rollout: token sequence must start with BOS");
  }
  DecodeState state = model.initial_state();
  std::vector<Vector> out;
  out.reserve(tokens.size());
  for (TokenId tok : tokens) out.push_back(model.step(state, tok, feature, rating));
  return out;
}

}  // namespace revgen
