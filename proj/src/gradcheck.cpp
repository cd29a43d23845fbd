#include "revgen/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "revgen/training.hpp"

namespace revgen {

namespace {

struct NamedView {
  std::string name;
  std::span<double> values;
};

/// Compares analytic[k] with central differences of `loss` over every entry of
/// the perturbed views, which must line up one-to-one with `analytic`.
template <typename LossFn>
GradCheckResult compare(const std::vector<NamedView>& perturbed,
                        const std::vector<NamedView>& analytic, LossFn&& loss,
                        const GradCheckOptions& options) {
  GradCheckResult r;
  for (std::size_t k = 0; k < perturbed.size(); ++k) {
    auto values = perturbed[k].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double plus = loss();
      values[i] = saved - options.step;
      const double minus = loss();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double err = gradient_relative_error(analytic[k].values[i], numeric);
      ++r.checked;
      if (!(err <= r.max_rel_error)) {
        r.max_rel_error = err;
        r.worst_param = perturbed[k].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  r.passed = r.max_rel_error < options.tolerance;
  return r;
}

std::vector<NamedView> named_views(GLSTMParams& p, const std::string& prefix = "") {
  std::vector<NamedView> out;
  p.visit([&](const std::string& name, auto& t) { out.push_back({prefix + name, t.values()}); });
  return out;
}

std::vector<NamedView> named_views(ModelParams& p) {
  std::vector<NamedView> out;
  p.visit([&](const std::string& name, auto& t) { out.push_back({name, t.values()}); });
  return out;
}

Vector random_vector(std::size_t n, double scale, Rng& rng) { return init_vector(n, scale, rng); }

void randomize_biases(GLSTMParams& p, Rng& rng) {
  for (auto& gate : p.gates) gate.bias = random_vector(gate.bias.size(), 0.5, rng);
}

}  // namespace

double gradient_relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckDims GradCheckDims::uniform(std::size_t n) {
  return {n + 2, n + 1, n, n, n, 5};
}

void GradCheckDims::validate() const {
  for (std::size_t d : {raw_feature_dim, feature_dim, hidden_dim, embed_dim}) {
    if (d == 0 || d > 8) throw ConfigError("gradcheck dimensions must be in 1..8");
  }
  if (vocab_size < Vocabulary::kNumReserved || vocab_size > 10) {
    throw ConfigError("gradcheck vocabulary must be in 4..10");
  }
  if (seq_len == 0 || seq_len > 8) throw ConfigError("gradcheck sequence length must be in 1..8");
}

GradCheckResult check_cell_gradients(std::size_t input_dim, std::size_t hidden_dim,
                                     std::size_t guidance_dim, std::uint64_t seed,
                                     const GradCheckOptions& options) {
  Rng rng(seed);
  GLSTMParams p = GLSTMParams::random(input_dim, hidden_dim, guidance_dim, 0.5, rng);
  randomize_biases(p, rng);
  Vector x = random_vector(input_dim, 1.0, rng);
  Vector g = random_vector(guidance_dim, 1.0, rng);
  GLSTMState prev{random_vector(hidden_dim, 1.0, rng), random_vector(hidden_dim, 1.0, rng)};
  const Vector a = random_vector(hidden_dim, 1.0, rng);
  const Vector b = random_vector(hidden_dim, 1.0, rng);

  auto loss = [&] {
    auto [next, tape] = glstm_forward(p, x, g, prev, options.cell);
    return dot(a.values(), next.m.values()) + dot(b.values(), next.c.values());
  };

  auto [next, tape] = glstm_forward(p, x, g, prev, options.cell);
  CellGradients grads = glstm_backward(p, tape, a, b);
  if (options.corrupt_cell) options.corrupt_cell(grads.params);

  std::vector<NamedView> perturbed = named_views(p);
  perturbed.push_back({"x", x.values()});
  perturbed.push_back({"g", g.values()});
  perturbed.push_back({"m_prev", prev.m.values()});
  perturbed.push_back({"c_prev", prev.c.values()});

  std::vector<NamedView> analytic = named_views(grads.params);
  analytic.push_back({"x", grads.inputs.d_x.values()});
  analytic.push_back({"g", grads.inputs.d_g.values()});
  analytic.push_back({"m_prev", grads.inputs.d_prev.m.values()});
  analytic.push_back({"c_prev", grads.inputs.d_prev.c.values()});

  return compare(perturbed, analytic, loss, options);
}

Model gradcheck_model(const GradCheckDims& dims, std::uint64_t seed,
                      const GradCheckOptions& options) {
  dims.validate();
  ModelConfig cfg;
  cfg.vocab_size = dims.vocab_size;
  cfg.embed_dim = dims.embed_dim;
  cfg.raw_feature_dim = dims.raw_feature_dim;
  cfg.feature_dim = dims.feature_dim;
  cfg.hidden_dim = dims.hidden_dim;
  cfg.output_tanh = options.cell.output_tanh;
  cfg.clip_cell = false;
  cfg.mask_norm = options.mask_norm;
  cfg.init_scale = 0.5;
  Model m = Model::create(cfg, seed);
  Rng rng(seed ^ 0xB1A5ULL);
  randomize_biases(m.params.lower, rng);
  randomize_biases(m.params.decoder.cell, rng);
  m.params.decoder.readout_bias = random_vector(cfg.vocab_size, 0.5, rng);
  return m;
}

ReviewExample gradcheck_example(const GradCheckDims& dims, std::uint64_t seed) {
  Rng rng(seed ^ 0xE7A3ULL);
  ReviewExample ex;
  ex.product_id = "gradcheck";
  ex.rating = static_cast<int>(rng.below(5)) + 1;
  ex.feature = random_vector(dims.raw_feature_dim, 1.0, rng);
  ex.tokens.push_back(Vocabulary::kBos);
  for (std::size_t t = 0; t + 1 < dims.seq_len; ++t) {
    ex.tokens.push_back(static_cast<TokenId>(
        Vocabulary::kUnk + rng.below(dims.vocab_size - Vocabulary::kUnk)));
  }
  ex.tokens.push_back(Vocabulary::kEos);
  return ex;
}

GradCheckResult check_model_gradients(const Model& model, const ReviewExample& example,
                                      const GradCheckOptions& options) {
  Model probe = model;
  SequenceLoss analytic = sequence_loss(model, example, true);
  if (options.corrupt_model) options.corrupt_model(analytic.grads);
  auto loss = [&] { return sequence_loss(probe, example, false).loss; };
  return compare(named_views(probe.params), named_views(analytic.grads), loss, options);
}

namespace {

nlohmann::json result_json(const GradCheckResult& r) {
  return {{"max_rel_error", r.max_rel_error},
          {"worst_param", r.worst_param},
          {"checked", r.checked},
          {"passed", r.passed}};
}

}  // namespace

std::string GradCheckReport::to_json() const {
  nlohmann::json j = {{"cell", result_json(cell)},
                      {"model", result_json(model)},
                      {"tolerance", kGradCheckTolerance},
                      {"passed", passed()}};
  return j.dump(2);
}

GradCheckReport gradcheck(const GradCheckDims& dims, std::uint64_t seed,
                          const GradCheckOptions& options) {
  dims.validate();
  GradCheckReport report;
  report.cell = check_cell_gradients(dims.embed_dim, dims.hidden_dim, dims.feature_dim + 5,
                                     seed, options);
  const Model model = gradcheck_model(dims, seed, options);
  report.model = check_model_gradients(model, gradcheck_example(dims, seed), options);
  return report;
}

}  // namespace revgen
