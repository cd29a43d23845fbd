#ifndef REVGEN_GLSTM_CELL_HPP_
#define REVGEN_GLSTM_CELL_HPP_

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "revgen/numerics.hpp"

namespace revgen {

/**
 * Guided LSTM step. Every gate sees the input x_t, the previous hidden state
 * m_{t-1} and a guidance vector g_t:
 *
 *   i_t = sigmoid(W_ix x_t + W_im m_{t-1} + W_iq g_t + b_i)
 *   f_t = sigmoid(W_fx x_t + W_fm m_{t-1} + W_fq g_t + b_f)
 *   o_t = sigmoid(W_ox x_t + W_om m_{t-1} + W_oq g_t + b_o)
 *   c_t = f_t * c_{t-1} + i_t * tanh(W_cx x_t + W_cm m_{t-1} + W_cq g_t + b_c)
 *   m_t = o_t * c_t
 *
 * The output has no tanh on c_t unless CellOptions::output_tanh is set.
 * With all biases zero the step is exactly the bias-free recurrence.
 */
enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCandidate = 3 };
inline constexpr std::size_t kNumGates = 4;

struct GateWeights {
  Matrix from_input;     // D_h x D_x
  Matrix from_hidden;    // D_h x D_h
  Matrix from_guidance;  // D_h x D_g
  Vector bias;           // D_h
};

struct GLSTMParams {
  std::array<GateWeights, kNumGates> gates;

  static GLSTMParams zeros(std::size_t input_dim, std::size_t hidden_dim,
                           std::size_t guidance_dim);
  /// Weights uniform in [-scale, scale], biases zero.
  static GLSTMParams random(std::size_t input_dim, std::size_t hidden_dim,
                            std::size_t guidance_dim, double scale, Rng& rng);

  std::size_t input_dim() const { return gates[0].from_input.cols(); }
  std::size_t hidden_dim() const { return gates[0].from_input.rows(); }
  std::size_t guidance_dim() const { return gates[0].from_guidance.cols(); }

  /// Throws DimensionError naming the first weight whose shape is inconsistent.
  void validate() const;
  void zero_guidance_weights();

  /// Calls fn(name, tensor) for every Matrix and Vector, names like "W_ix", "b_c".
  template <typename Fn>
  void visit(Fn&& fn) { visit_impl(*this, fn); }
  template <typename Fn>
  void visit(Fn&& fn) const { visit_impl(*this, fn); }

 private:
  template <typename Self, typename Fn>
  static void visit_impl(Self& self, Fn& fn) {
    static constexpr std::array<char, kNumGates> kTag = {'i', 'f', 'o', 'c'};
    for (std::size_t k = 0; k < kNumGates; ++k) {
      const std::string t(1, kTag[k]);
      fn("W_" + t + "x", self.gates[k].from_input);
      fn("W_" + t + "m", self.gates[k].from_hidden);
      fn("W_" + t + "q", self.gates[k].from_guidance);
      fn("b_" + t, self.gates[k].bias);
    }
  }
};

struct GLSTMState {
  Vector m;  // hidden state
  Vector c;  // memory cell

  static GLSTMState zeros(std::size_t hidden_dim) {
    return {Vector(hidden_dim), Vector(hidden_dim)};
  }
};

struct CellOptions {
  bool output_tanh = false;
  bool clip_cell = true;
  double cell_clip = 50.0;
};

/// Everything the backward pass needs from one forward step.
struct StepTape {
  Vector x;
  Vector g;
  GLSTMState prev;
  std::array<Vector, kNumGates> act;  // gate activations, candidate = tanh(.)
  Vector cell;                        // c_t after clipping
  Vector cell_out;                    // tanh(c_t) when output_tanh, else c_t
  std::vector<bool> clipped;
  CellOptions options;
};

std::pair<GLSTMState, StepTape> glstm_forward(const GLSTMParams& p, const Vector& x,
                                              const Vector& g, const GLSTMState& prev,
                                              const CellOptions& options = {});

struct CellInputGrads {
  Vector d_x;
  Vector d_g;
  GLSTMState d_prev;
};

/// Accumulates parameter gradients into `grads` and returns gradients for the
/// step inputs. d_m and d_c are the loss gradients w.r.t. m_t and c_t.
CellInputGrads glstm_backward_acc(const GLSTMParams& p, const StepTape& tape, const Vector& d_m,
                                  const Vector& d_c, GLSTMParams& grads);

struct CellGradients {
  GLSTMParams params;
  CellInputGrads inputs;
};

CellGradients glstm_backward(const GLSTMParams& p, const StepTape& tape, const Vector& d_m,
                             const Vector& d_c);

}  // namespace revgen

#endif  // REVGEN_GLSTM_CELL_HPP_
