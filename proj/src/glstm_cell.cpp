#include "revgen/glstm_cell.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

namespace revgen {

namespace {

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError("gLSTM weight " + name + " is " + m.shape_string() + ", expected " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void require_length(const Vector& v, std::size_t n, const std::string& name) {
  if (v.size() != n) {
    throw DimensionError("gLSTM " + name + " has length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(n));
  }
}

}  // namespace

GLSTMParams GLSTMParams::zeros(std::size_t input_dim, std::size_t hidden_dim,
                               std::size_t guidance_dim) {
  GLSTMParams p;
  for (auto& gate : p.gates) {
    gate.from_input = Matrix(hidden_dim, input_dim);
    gate.from_hidden = Matrix(hidden_dim, hidden_dim);
    gate.from_guidance = Matrix(hidden_dim, guidance_dim);
    gate.bias = Vector(hidden_dim);
  }
  return p;
}

GLSTMParams GLSTMParams::random(std::size_t input_dim, std::size_t hidden_dim,
                                std::size_t guidance_dim, double scale, Rng& rng) {
  GLSTMParams p;
  for (auto& gate : p.gates) {
    gate.from_input = init_matrix(hidden_dim, input_dim, scale, rng);
    gate.from_hidden = init_matrix(hidden_dim, hidden_dim, scale, rng);
    gate.from_guidance = init_matrix(hidden_dim, guidance_dim, scale, rng);
    gate.bias = Vector(hidden_dim);
  }
  return p;
}

void GLSTMParams::validate() const {
  const std::size_t dh = hidden_dim();
  const std::size_t dx = input_dim();
  const std::size_t dg = guidance_dim();
  visit([&](const std::string& name, const auto& t) {
    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Matrix>) {
      const char src = name.back();
      const std::size_t cols = src == 'x' ? dx : src == 'm' ? dh : dg;
      require_shape(t, dh, cols, name);
    } else {
      require_length(t, dh, name);
    }
  });
}

void GLSTMParams::zero_guidance_weights() {
  for (auto& gate : gates) gate.from_guidance.fill(0.0);
}

std::pair<GLSTMState, StepTape> glstm_forward(const GLSTMParams& p, const Vector& x,
                                              const Vector& g, const GLSTMState& prev,
                                              const CellOptions& options) {
  p.validate();
  const std::size_t dh = p.hidden_dim();
  require_length(x, p.input_dim(), "input x_t");
  require_length(g, p.guidance_dim(), "guidance g_t");
  require_length(prev.m, dh, "previous hidden state");
  require_length(prev.c, dh, "previous memory cell");

  StepTape tape;
  tape.x = x;
  tape.g = g;
  tape.prev = prev;
  tape.options = options;

  for (std::size_t k = 0; k < kNumGates; ++k) {
    const GateWeights& w = p.gates[k];
    Vector pre(dh);
    matvec_acc(w.from_input, x, pre);
    matvec_acc(w.from_hidden, prev.m, pre);
    matvec_acc(w.from_guidance, g, pre);
    for (std::size_t j = 0; j < dh; ++j) pre[j] += w.bias[j];
    tape.act[k] = k == kCandidate ? tanh(pre) : sigmoid(pre);
  }

  GLSTMState next{Vector(dh), Vector(dh)};
  tape.clipped.assign(dh, false);
  for (std::size_t j = 0; j < dh; ++j) {
    double c = tape.act[kForgetGate][j] * prev.c[j] +
               tape.act[kInputGate][j] * tape.act[kCandidate][j];
    if (options.clip_cell && std::abs(c) > options.cell_clip) {
      c = std::clamp(c, -options.cell_clip, options.cell_clip);
      tape.clipped[j] = true;
    }
    next.c[j] = c;
  }
  tape.cell = next.c;
  tape.cell_out = options.output_tanh ? tanh(next.c) : next.c;
  for (std::size_t j = 0; j < dh; ++j) {
    next.m[j] = tape.act[kOutputGate][j] * tape.cell_out[j];
  }
  return {std::move(next), std::move(tape)};
}

CellInputGrads glstm_backward_acc(const GLSTMParams& p, const StepTape& tape, const Vector& d_m,
                                  const Vector& d_c, GLSTMParams& grads) {
  const std::size_t dh = p.hidden_dim();
  if (tape.cell.size() != dh || tape.x.size() != p.input_dim() ||
      tape.g.size() != p.guidance_dim()) {
    throw DimensionError("glstm_backward: tape does not match parameter shapes");
  }
  if (grads.hidden_dim() != dh || grads.input_dim() != p.input_dim() ||
      grads.guidance_dim() != p.guidance_dim()) {
    throw DimensionError("glstm_backward: gradient buffer does not match parameter shapes");
  }
  require_length(d_m, dh, "upstream d_m");
  require_length(d_c, dh, "upstream d_c");

  const Vector& ig = tape.act[kInputGate];
  const Vector& fg = tape.act[kForgetGate];
  const Vector& og = tape.act[kOutputGate];
  const Vector& cand = tape.act[kCandidate];

  std::array<Vector, kNumGates> d_pre;
  for (auto& v : d_pre) v = Vector(dh);

  CellInputGrads out{Vector(p.input_dim()), Vector(p.guidance_dim()), GLSTMState::zeros(dh)};

  for (std::size_t j = 0; j < dh; ++j) {
    double dcell_out = d_m[j] * og[j];
    if (tape.options.output_tanh) dcell_out *= 1.0 - tape.cell_out[j] * tape.cell_out[j];
    double dc = tape.clipped[j] ? 0.0 : d_c[j] + dcell_out;

    const double d_o = d_m[j] * tape.cell_out[j];
    const double d_f = dc * tape.prev.c[j];
    const double d_i = dc * cand[j];
    const double d_cand = dc * ig[j];
    out.d_prev.c[j] = dc * fg[j];

    d_pre[kInputGate][j] = d_i * ig[j] * (1.0 - ig[j]);
    d_pre[kForgetGate][j] = d_f * fg[j] * (1.0 - fg[j]);
    d_pre[kOutputGate][j] = d_o * og[j] * (1.0 - og[j]);
    d_pre[kCandidate][j] = d_cand * (1.0 - cand[j] * cand[j]);
  }

  for (std::size_t k = 0; k < kNumGates; ++k) {
    const GateWeights& w = p.gates[k];
    GateWeights& gw = grads.gates[k];
    add_outer(gw.from_input, d_pre[k], tape.x);
    add_outer(gw.from_hidden, d_pre[k], tape.prev.m);
    add_outer(gw.from_guidance, d_pre[k], tape.g);
    axpy(1.0, d_pre[k].values(), gw.bias.values());

    matvec_transposed_acc(w.from_input, d_pre[k], out.d_x);
    matvec_transposed_acc(w.from_hidden, d_pre[k], out.d_prev.m);
    matvec_transposed_acc(w.from_guidance, d_pre[k], out.d_g);
  }
  return out;
}

CellGradients glstm_backward(const GLSTMParams& p, const StepTape& tape, const Vector& d_m,
                             const Vector& d_c) {
  CellGradients result;
  result.params = GLSTMParams::zeros(p.input_dim(), p.hidden_dim(), p.guidance_dim());
  result.inputs = glstm_backward_acc(p, tape, d_m, d_c, result.params);
  return result;
}

}  // namespace revgen
