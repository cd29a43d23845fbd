#ifndef REVGEN_GUIDANCE_HPP_
#define REVGEN_GUIDANCE_HPP_

#include <string>

#include "revgen/glstm_cell.hpp"
#include "revgen/numerics.hpp"

namespace revgen {

/// How the lower cell's hidden state is turned into a mask. kNone uses m_t as is.
enum class MaskNorm { kNone, kSoftmax, kSigmoid };

std::string to_string(MaskNorm norm);
MaskNorm parse_mask_norm(const std::string& s);

/// Forward record of one attention-mask step.
struct MaskTape {
  StepTape cell;
  Vector mask;
  MaskNorm norm = MaskNorm::kNone;
};

/// Throws ConfigError unless the lower cell's hidden size equals the feature length.
void check_mask_dims(const GLSTMParams& lower, std::size_t feature_dim);

/// Runs the lower gLSTM one step on the previous word embedding under rating
/// guidance and returns the attention mask. Advances `state` in place. The lower
/// cell never sees the image feature.
Vector attention_mask(const GLSTMParams& lower, GLSTMState& state, const Vector& word_embedding,
                      const Vector& rating, const CellOptions& options = {},
                      MaskNorm norm = MaskNorm::kNone, MaskTape* tape = nullptr);

Vector normalize_mask(const Vector& hidden, MaskNorm norm);
/// Gradient w.r.t. the lower hidden state given the gradient w.r.t. the mask.
Vector normalize_mask_backward(const MaskTape& tape, const Vector& d_mask);

/// (feature * mask) followed by the rating encoding.
Vector fuse_guidance(const Vector& feature, const Vector& mask, const Vector& rating);

struct FuseGrads {
  Vector d_feature;
  Vector d_mask;
};
FuseGrads fuse_guidance_backward(const Vector& feature, const Vector& mask,
                                 const Vector& d_combined);

/// feature = projection * raw.
Vector project_feature(const Vector& raw, const Matrix& projection);

}  // namespace revgen

#endif  // REVGEN_GUIDANCE_HPP_
