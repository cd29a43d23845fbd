#ifndef REVGEN_DECODER_HPP_
#define REVGEN_DECODER_HPP_

#include <string>
#include <utility>

#include "revgen/glstm_cell.hpp"
#include "revgen/numerics.hpp"

namespace revgen {

/// Upper, time-dependent gLSTM plus the softmax readout over the vocabulary.
struct DecoderParams {
  GLSTMParams cell;     // guidance_dim = feature_dim + rating_dim
  Matrix readout;       // W_y: vocab_size x hidden_dim
  Vector readout_bias;  // b_y: vocab_size

  static DecoderParams zeros(std::size_t embed_dim, std::size_t hidden_dim,
                             std::size_t guidance_dim, std::size_t vocab_size);
  static DecoderParams random(std::size_t embed_dim, std::size_t hidden_dim,
                              std::size_t guidance_dim, std::size_t vocab_size, double scale,
                              Rng& rng);

  std::size_t vocab_size() const { return readout.rows(); }
  void validate() const;

  template <typename Fn>
  void visit(Fn&& fn) { visit_impl(*this, fn); }
  template <typename Fn>
  void visit(Fn&& fn) const { visit_impl(*this, fn); }

 private:
  template <typename Self, typename Fn>
  static void visit_impl(Self& self, Fn& fn) {
    self.cell.visit(fn);
    fn(std::string("W_y"), self.readout);
    fn(std::string("b_y"), self.readout_bias);
  }
};

struct DecodeTape {
  StepTape cell;
  Vector hidden;  // m_t
  Vector logits;
  Vector probs;
};

/// One td-gLSTM step followed by softmax(W_y m_t + b_y). Returns the next-token
/// distribution and the new decoder state.
std::pair<Vector, GLSTMState> decode_step(const DecoderParams& p, const Vector& word_embedding,
                                          const Vector& combined_guidance,
                                          const GLSTMState& prev, const CellOptions& options = {},
                                          DecodeTape* tape = nullptr);

}  // namespace revgen

#endif  // REVGEN_DECODER_HPP_
