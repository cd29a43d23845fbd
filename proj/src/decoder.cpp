#include "revgen/decoder.hpp"

namespace revgen {

namespace {

constexpr std::size_t kMinVocab = 4;

}  // namespace

DecoderParams DecoderParams::zeros(std::size_t embed_dim, std::size_t hidden_dim,
                                   std::size_t guidance_dim, std::size_t vocab_size) {
  return {GLSTMParams::zeros(embed_dim, hidden_dim, guidance_dim),
          Matrix(vocab_size, hidden_dim), Vector(vocab_size)};
}

DecoderParams DecoderParams::random(std::size_t embed_dim, std::size_t hidden_dim,
                                    std::size_t guidance_dim, std::size_t vocab_size,
                                    double scale, Rng& rng) {
  DecoderParams p;
  p.cell = GLSTMParams::random(embed_dim, hidden_dim, guidance_dim, scale, rng);
  p.readout = init_matrix(vocab_size, hidden_dim, scale, rng);
  p.readout_bias = Vector(vocab_size);
  return p;
}

void DecoderParams::validate() const {
  cell.validate();
  if (readout.rows() < kMinVocab) {
    throw DimensionError("decoder vocabulary must hold at least the 4 control tokens, got " +
                         std::to_string(readout.rows()));
  }
  if (readout.cols() != cell.hidden_dim()) {
    throw DimensionError("decoder W_y is " + readout.shape_string() + " but hidden size is " +
                         std::to_string(cell.hidden_dim()));
  }
  if (readout_bias.size() != readout.rows()) {
    throw DimensionError("decoder b_y length " + std::to_string(readout_bias.size()) +
                         " != vocabulary size " + std::to_string(readout.rows()));
  }
}

std::pair<Vector, GLSTMState> decode_step(const DecoderParams& p, const Vector& word_embedding,
                                          const Vector& combined_guidance,
                                          const GLSTMState& prev, const CellOptions& options,
                                          DecodeTape* tape) {
  auto [next, step] = glstm_forward(p.cell, word_embedding, combined_guidance, prev, options);
  Vector logits = p.readout_bias;
  matvec_acc(p.readout, next.m, logits);
  Vector probs = softmax(logits);
  if (tape != nullptr) {
    tape->cell = std::move(step);
    tape->hidden = next.m;
    tape->logits = std::move(logits);
    tape->probs = probs;
  }
  return {std::move(probs), std::move(next)};
}

}  // namespace revgen
