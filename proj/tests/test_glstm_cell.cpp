#include <doctest.h>

#include <cmath>
#include <string>

#include "revgen/errors.hpp"
#include "revgen/glstm_cell.hpp"
#include "revgen/gradcheck.hpp"
#include "support.hpp"

using namespace revgen;
using revgen_test::Vec;

namespace {

Vector rand_vec(std::size_t n, double scale, Rng& rng) { return init_vector(n, scale, rng); }

GLSTMParams random_params(std::size_t dx, std::size_t dh, std::size_t dg, Rng& rng,
                          double scale = 0.5) {
  GLSTMParams p = GLSTMParams::random(dx, dh, dg, scale, rng);
  for (auto& gate : p.gates) gate.bias = rand_vec(dh, 0.5, rng);
  return p;
}

}  // namespace

TEST_CASE("zero cell gives half-open gates and zero state") {
  const GLSTMParams p = GLSTMParams::zeros(3, 4, 2);
  auto [next, tape] = glstm_forward(p, Vector{1, -2, 3}, Vector{7, 8}, GLSTMState::zeros(4));
  for (std::size_t k = 0; k < 3; ++k) CHECK(tape.act[k] == Vector(4, 0.5));
  CHECK(tape.act[kCandidate] == Vector(4, 0.0));
  CHECK(next.c == Vector(4, 0.0));
  CHECK(next.m == Vector(4, 0.0));
}

TEST_CASE("guidance-free cell matches a plain LSTM bit for bit") {
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    GLSTMParams p = random_params(3, 5, 4, rng, 1.0);
    p.zero_guidance_weights();
    const auto ref = revgen_test::ReferenceLstm::from(p, true, 50.0);
    GLSTMState s = GLSTMState::zeros(5);
    Vec m(5, 0.0), c(5, 0.0);
    for (int t = 0; t < 12; ++t) {
      const Vector x = rand_vec(3, 2.0, rng);
      const Vector g = rand_vec(4, 5.0, rng);
      s = glstm_forward(p, x, g, s).first;
      ref.step(revgen_test::to_vec(x), m, c);
      for (std::size_t j = 0; j < 5; ++j) {
        REQUIRE(s.m[j] == m[j]);
        REQUIRE(s.c[j] == c[j]);
      }
    }
  }
}

TEST_CASE("forward step agrees with a unit-by-unit transcription") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const GLSTMParams p = random_params(3, 3, 3, rng, 0.3);
    const Vector x = rand_vec(3, 1.0, rng), g = rand_vec(3, 1.0, rng);
    const GLSTMState prev{rand_vec(3, 1.0, rng), rand_vec(3, 1.0, rng)};
    auto [next, tape] = glstm_forward(p, x, g, prev, {false, false, 50.0});
    const auto want = revgen_test::eq2_oracle(p, revgen_test::to_vec(x), revgen_test::to_vec(g),
                                              revgen_test::to_vec(prev.m),
                                              revgen_test::to_vec(prev.c));
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::abs(tape.act[kInputGate][j] - want.i[j]) < 1e-12);
      CHECK(std::abs(tape.act[kForgetGate][j] - want.f[j]) < 1e-12);
      CHECK(std::abs(tape.act[kOutputGate][j] - want.o[j]) < 1e-12);
      CHECK(std::abs(tape.act[kCandidate][j] - want.cand[j]) < 1e-12);
      CHECK(std::abs(next.c[j] - want.c[j]) < 1e-12);
      CHECK(std::abs(next.m[j] - want.m[j]) < 1e-12);
    }
  }
}

TEST_CASE("output is o*c by default and o*tanh(c) on request") {
  Rng rng(4);
  const GLSTMParams p = random_params(2, 3, 2, rng);
  const Vector x{0.3, -0.2}, g{1, 0};
  const GLSTMState prev{Vector{0.1, 0.2, 0.3}, Vector{2.0, -1.5, 0.5}};
  auto [plain, t1] = glstm_forward(p, x, g, prev);
  auto [squashed, t2] = glstm_forward(p, x, g, prev, {true, true, 50.0});
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(plain.m[j] == t1.act[kOutputGate][j] * plain.c[j]);
    CHECK(squashed.m[j] == t2.act[kOutputGate][j] * std::tanh(squashed.c[j]));
  }
}

TEST_CASE("memory cell is clipped to the configured bound") {
  GLSTMParams p = GLSTMParams::zeros(1, 2, 1);
  for (auto& b : p.gates[kForgetGate].bias.values()) b = 30.0;  // forget gate ~1
  GLSTMState prev{Vector{0, 0}, Vector{80.0, -80.0}};
  auto [next, tape] = glstm_forward(p, Vector{0}, Vector{0}, prev);
  CHECK(next.c == Vector{50.0, -50.0});
  CHECK(tape.clipped == std::vector<bool>{true, true});
  auto [raw, tape2] = glstm_forward(p, Vector{0}, Vector{0}, prev, {false, false, 50.0});
  CHECK(std::abs(raw.c[0]) > 50.0);
}

TEST_CASE("gates stay inside the unit interval") {
  Rng rng(31);
  // Moderate pre-activations: strictly inside.
  for (int trial = 0; trial < 100; ++trial) {
    const GLSTMParams p = random_params(4, 4, 4, rng, 0.5);
    const GLSTMState prev{rand_vec(4, 1.0, rng), rand_vec(4, 1.0, rng)};
    auto [next, tape] = glstm_forward(p, rand_vec(4, 1.0, rng), rand_vec(4, 1.0, rng), prev);
    for (std::size_t k = 0; k < 3; ++k) {
      for (double a : tape.act[k].values()) {
        CHECK(a > 0.0);
        CHECK(a < 1.0);
      }
    }
    for (double a : tape.act[kCandidate].values()) CHECK(std::abs(a) < 1.0);
  }
  // Large ones saturate to the bounds in double precision but never cross them.
  for (int trial = 0; trial < 100; ++trial) {
    const GLSTMParams p = random_params(4, 4, 4, rng, 2.0);
    const GLSTMState prev{rand_vec(4, 3.0, rng), rand_vec(4, 3.0, rng)};
    auto [next, tape] = glstm_forward(p, rand_vec(4, 5.0, rng), rand_vec(4, 5.0, rng), prev);
    for (std::size_t k = 0; k < 3; ++k) {
      for (double a : tape.act[k].values()) {
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
      }
    }
    for (double a : tape.act[kCandidate].values()) CHECK(std::abs(a) <= 1.0);
    CHECK(all_finite(next.m.values()));
  }
}

TEST_CASE("dimension errors name the offending weight or input") {
  GLSTMParams p = GLSTMParams::zeros(3, 4, 2);
  CHECK_THROWS_AS(glstm_forward(p, Vector{1, 2}, Vector{1, 2}, GLSTMState::zeros(4)),
                  DimensionError);
  CHECK_THROWS_AS(glstm_forward(p, Vector{1, 2, 3}, Vector{1}, GLSTMState::zeros(4)),
                  DimensionError);
  CHECK_THROWS_AS(glstm_forward(p, Vector{1, 2, 3}, Vector{1, 2}, GLSTMState::zeros(3)),
                  DimensionError);
  p.gates[kOutputGate].from_guidance = Matrix(4, 3);
  try {
    glstm_forward(p, Vector{1, 2, 3}, Vector{1, 2}, GLSTMState::zeros(4));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("W_oq") != std::string::npos);
  }
}

TEST_CASE("forward is deterministic") {
  Rng rng(2);
  const GLSTMParams p = random_params(3, 3, 3, rng);
  const Vector x = rand_vec(3, 1, rng), g = rand_vec(3, 1, rng);
  const GLSTMState prev{rand_vec(3, 1, rng), rand_vec(3, 1, rng)};
  const auto a = glstm_forward(p, x, g, prev).first;
  const auto b = glstm_forward(p, x, g, prev).first;
  CHECK(a.m == b.m);
  CHECK(a.c == b.c);
}

TEST_CASE("zero upstream gradient gives zero gradients") {
  Rng rng(6);
  const GLSTMParams p = random_params(3, 4, 2, rng);
  auto [next, tape] = glstm_forward(p, rand_vec(3, 1, rng), rand_vec(2, 1, rng),
                                    GLSTMState{rand_vec(4, 1, rng), rand_vec(4, 1, rng)});
  const CellGradients g = glstm_backward(p, tape, Vector(4), Vector(4));
  g.params.visit([](const std::string& name, const auto& t) {
    for (double v : t.values()) CHECK_MESSAGE(v == 0.0, name);
  });
  CHECK(g.inputs.d_x == Vector(3));
  CHECK(g.inputs.d_g == Vector(2));
  CHECK(g.inputs.d_prev.m == Vector(4));
  CHECK(g.inputs.d_prev.c == Vector(4));
}

TEST_CASE("guidance gradient vanishes when guidance weights are zero") {
  Rng rng(8);
  GLSTMParams p = random_params(3, 4, 5, rng);
  p.zero_guidance_weights();
  auto [next, tape] = glstm_forward(p, rand_vec(3, 1, rng), rand_vec(5, 1, rng),
                                    GLSTMState{rand_vec(4, 1, rng), rand_vec(4, 1, rng)});
  const CellGradients g = glstm_backward(p, tape, rand_vec(4, 1, rng), rand_vec(4, 1, rng));
  CHECK(g.inputs.d_g == Vector(5));
}

TEST_CASE("backward rejects a tape from other shapes") {
  Rng rng(1);
  const GLSTMParams p = random_params(3, 4, 2, rng);
  const GLSTMParams q = random_params(2, 4, 2, rng);
  auto [next, tape] = glstm_forward(q, Vector{1, 2}, Vector{1, 2}, GLSTMState::zeros(4));
  CHECK_THROWS_AS(glstm_backward(p, tape, Vector(4), Vector(4)), DimensionError);
}

TEST_CASE("cell gradients match finite differences on D=4 instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = check_cell_gradients(4, 4, 4, seed);
    CHECK_MESSAGE(r.max_rel_error < 1e-6, "seed " << seed << " worst " << r.worst_param);
  }
}

TEST_CASE("cell gradients on 100 random configurations") {
  Rng dims(2024);
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const std::size_t dx = 1 + dims.below(6), dh = 1 + dims.below(6), dg = 1 + dims.below(6);
    GradCheckOptions opts;
    opts.cell.output_tanh = trial % 2 == 1;
    const auto r = check_cell_gradients(dx, dh, dg, 500 + trial, opts);
    worst = std::max(worst, r.max_rel_error);
    CHECK_MESSAGE(r.max_rel_error < 1e-6, "dims " << dx << "," << dh << "," << dg << " worst "
                                                  << r.worst_param << " " << r.max_rel_error);
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("checker flags a corrupted cell gradient") {
  GradCheckOptions opts;
  opts.corrupt_cell = [](GLSTMParams& g) { g.gates[kForgetGate].from_hidden(1, 2) += 1e-3; };
  CHECK_FALSE(check_cell_gradients(4, 4, 4, 3, opts).passed);
}
