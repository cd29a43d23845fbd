#ifndef REVGEN_MODEL_HPP_
#define REVGEN_MODEL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "revgen/decoder.hpp"
#include "revgen/glstm_cell.hpp"
#include "revgen/guidance.hpp"
#include "revgen/numerics.hpp"
#include "revgen/textdata.hpp"

namespace revgen {

struct ModelConfig {
  std::size_t vocab_size = 4;
  std::size_t embed_dim = 32;
  /// Length of the feature vectors on disk.
  std::size_t raw_feature_dim = 32;
  /// F: length of the (projected) feature the mask applies to.
  std::size_t feature_dim = 32;
  /// Decoder hidden size; the lower cell's hidden size is always feature_dim.
  std::size_t hidden_dim = 64;
  RatingEncoding rating_encoding = RatingEncoding::kOneHot;
  MaskNorm mask_norm = MaskNorm::kNone;
  bool output_tanh = false;
  bool clip_cell = true;
  double cell_clip = 50.0;
  double init_scale = kDefaultInitScale;
  bool embedding_trainable = true;

  std::size_t rating_dim() const { return revgen::rating_dim(rating_encoding); }
  std::size_t guidance_dim() const { return feature_dim + rating_dim(); }
  bool has_projection() const { return raw_feature_dim != feature_dim; }
  CellOptions cell_options() const { return {output_tanh, clip_cell, cell_clip}; }
};

struct ModelParams {
  Matrix embedding;   // vocab_size x embed_dim, shared by both levels
  Matrix projection;  // feature_dim x raw_feature_dim, empty when unused
  GLSTMParams lower;  // embed_dim -> feature_dim, guided by the rating
  DecoderParams decoder;

  /// Same shapes, all zeros. Used as a gradient buffer.
  ModelParams zeros_like() const;

  template <typename Fn>
  void visit(Fn&& fn) { visit_impl(*this, fn); }
  template <typename Fn>
  void visit(Fn&& fn) const { visit_impl(*this, fn); }

  std::size_t parameter_count() const;

 private:
  template <typename Self, typename Fn>
  static void visit_impl(Self& self, Fn& fn) {
    fn(std::string("embedding"), self.embedding);
    if (self.projection.size() != 0) fn(std::string("projection"), self.projection);
    self.lower.visit([&](const std::string& name, auto& t) { fn("lower/" + name, t); });
    self.decoder.visit([&](const std::string& name, auto& t) { fn("decoder/" + name, t); });
  }
};

/// Flat views over every tensor in visit order.
std::vector<std::span<double>> tensor_views(ModelParams& params);
std::vector<std::span<const double>> tensor_views(const ModelParams& params);

/// Recurrent state of both levels during decoding.
struct DecodeState {
  GLSTMState lower;
  GLSTMState upper;
};

struct Model {
  ModelConfig config;
  ModelParams params;

  /// Random weights in [-init_scale, init_scale], zero biases.
  static Model create(const ModelConfig& config, std::uint64_t seed);
  static Model zeros(const ModelConfig& config);

  /// Throws ConfigError/DimensionError when config and tensors disagree.
  void validate() const;
  void zero_guidance_weights();

  /// Projects a raw on-disk feature to length F (identity when no projection).
  Vector image_feature(const Vector& raw) const;
  Vector rating_vector(int rating) const { return encode_rating(rating, config.rating_encoding); }

  DecodeState initial_state() const;
  /// Feeds `token` to both levels and returns the next-token distribution.
  Vector step(DecodeState& state, TokenId token, const Vector& feature,
              const Vector& rating) const;
  Vector embed(TokenId token) const;
};

/// Teacher-forced pass over `tokens` (which must start with BOS); one
/// distribution per input position. `feature` is the projected feature.
std::vector<Vector> rollout(const Model& model, const Vector& feature, const Vector& rating,
                            const std::vector<TokenId>& tokens);

}  // namespace revgen

#endif  // REVGEN_MODEL_HPP_
