#include "revgen/guidance.hpp"

namespace revgen {

std::string to_string(MaskNorm norm) {
  switch (norm) {
    case MaskNorm::kNone: return "none";
    case MaskNorm::kSoftmax: return "softmax";
    case MaskNorm::kSigmoid: return "sigmoid";
  }
  return "none";
}

MaskNorm parse_mask_norm(const std::string& s) {
  if (s == "none") return MaskNorm::kNone;
  if (s == "softmax") return MaskNorm::kSoftmax;
  if (s == "sigmoid") return MaskNorm::kSigmoid;
  throw ConfigError("unknown mask normalization '" + s + "' (expected none|softmax|sigmoid)");
}

void check_mask_dims(const GLSTMParams& lower, std::size_t feature_dim) {
  if (lower.hidden_dim() != feature_dim) {
    throw ConfigError("lower gLSTM hidden size " + std::to_string(lower.hidden_dim()) +
                      " must equal the image feature length " + std::to_string(feature_dim));
  }
}

Vector normalize_mask(const Vector& hidden, MaskNorm norm) {
  switch (norm) {
    case MaskNorm::kNone: return hidden;
    case MaskNorm::kSoftmax: return softmax(hidden);
    case MaskNorm::kSigmoid: return sigmoid(hidden);
  }
  return hidden;
}

Vector normalize_mask_backward(const MaskTape& tape, const Vector& d_mask) {
  const Vector& s = tape.mask;
  if (d_mask.size() != s.size()) throw DimensionError("mask gradient length mismatch");
  switch (tape.norm) {
    case MaskNorm::kNone:
      return d_mask;
    case MaskNorm::kSigmoid: {
      Vector out(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) out[i] = d_mask[i] * s[i] * (1.0 - s[i]);
      return out;
    }
    case MaskNorm::kSoftmax: {
      const double inner = dot(d_mask.values(), s.values());
      Vector out(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] * (d_mask[i] - inner);
      return out;
    }
  }
  return d_mask;
}

Vector attention_mask(const GLSTMParams& lower, GLSTMState& state, const Vector& word_embedding,
                      const Vector& rating, const CellOptions& options, MaskNorm norm,
                      MaskTape* tape) {
  auto [next, step] = glstm_forward(lower, word_embedding, rating, state, options);
  Vector mask = normalize_mask(next.m, norm);
  state = std::move(next);
  if (tape != nullptr) {
    tape->cell = std::move(step);
    tape->mask = mask;
    tape->norm = norm;
  }
  return mask;
}

Vector fuse_guidance(const Vector& feature, const Vector& mask, const Vector& rating) {
  if (feature.size() != mask.size()) {
    throw DimensionError("fuse_guidance: feature length " + std::to_string(feature.size()) +
                         " vs mask length " + std::to_string(mask.size()));
  }
  return concat(hadamard(feature, mask), rating);
}

FuseGrads fuse_guidance_backward(const Vector& feature, const Vector& mask,
                                 const Vector& d_combined) {
  const std::size_t f = feature.size();
  if (mask.size() != f || d_combined.size() < f) {
    throw DimensionError("fuse_guidance_backward: length mismatch");
  }
  FuseGrads out{Vector(f), Vector(f)};
  for (std::size_t i = 0; i < f; ++i) {
    out.d_feature[i] = d_combined[i] * mask[i];
    out.d_mask[i] = d_combined[i] * feature[i];
  }
  return out;
}

Vector project_feature(const Vector& raw, const Matrix& projection) {
  if (projection.cols() != raw.size()) {
    throw DimensionError("project_feature: projection " + projection.shape_string() +
                         " cannot map a feature of length " + std::to_string(raw.size()));
  }
  return matvec(projection, raw);
}

}  // namespace revgen
