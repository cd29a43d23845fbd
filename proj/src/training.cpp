#include "revgen/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "revgen/log.hpp"

namespace revgen {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd|adam)");
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("training config: ") + what);
  };
  require(epochs > 0, "epochs must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(grad_clip_norm > 0.0, "grad_clip_norm must be positive");
  require(max_len > 0, "max_len must be positive");
  require(feature_dim > 0 && hidden_dim > 0 && embed_dim > 0, "dimensions must be positive");
  require(min_count > 0, "min_count must be positive");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam beta1 must be in [0, 1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam beta2 must be in [0, 1)");
  require(adam_epsilon > 0.0, "adam epsilon must be positive");
}

ModelConfig model_config_for(const TrainConfig& config, std::size_t vocab_size,
                             std::size_t raw_feature_dim) {
  ModelConfig mc;
  mc.vocab_size = vocab_size;
  mc.embed_dim = config.embed_dim;
  mc.raw_feature_dim = raw_feature_dim;
  mc.feature_dim = config.feature_dim;
  mc.hidden_dim = config.hidden_dim;
  return mc;
}

namespace {

struct StepRecord {
  TokenId token = 0;
  MaskTape mask;
  DecodeTape decode;
};

double log_prob_of(const Vector& logits, TokenId target) {
  double mx = logits[0];
  for (double v : logits.values()) mx = std::max(mx, v);
  double total = 0.0;
  for (double v : logits.values()) total += std::exp(v - mx);
  return logits[target] - mx - std::log(total);
}

void add_into(ModelParams& dst, const ModelParams& src, double scale) {
  auto d = tensor_views(dst);
  auto s = tensor_views(src);
  for (std::size_t k = 0; k < d.size(); ++k) axpy(scale, s[k], d[k]);
}

}  // namespace

SequenceLoss sequence_loss(const Model& model, const ReviewExample& example, bool with_grads) {
  const auto& tokens = example.tokens;
  if (tokens.size() < 2) {
    throw std::invalid_argument("sequence_loss: need at least BOS and one target token");
  }
  if (tokens.front() != Vocabulary::kBos) {
    throw std::invalid_argument("sequence_loss: token sequence must start with BOS");
  }
  const ModelConfig& cfg = model.config;
  const ModelParams& p = model.params;
  const CellOptions opts = cfg.cell_options();
  const std::size_t steps = tokens.size() - 1;

  const Vector feature = model.image_feature(example.feature);
  const Vector rating = model.rating_vector(example.rating);

  std::vector<StepRecord> records(steps);
  DecodeState state = model.initial_state();
  double nll = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    StepRecord& rec = records[t];
    rec.token = tokens[t];
    const Vector x = model.embed(rec.token);
    const Vector mask =
        attention_mask(p.lower, state.lower, x, rating, opts, cfg.mask_norm, &rec.mask);
    const Vector guidance = fuse_guidance(feature, mask, rating);
    auto [probs, next] = decode_step(p.decoder, x, guidance, state.upper, opts, &rec.decode);
    state.upper = std::move(next);
    const TokenId target = tokens[t + 1];
    if (target >= cfg.vocab_size) {
      throw std::out_of_range("sequence_loss: token id " + std::to_string(target) +
                              " outside vocabulary");
    }
    nll -= log_prob_of(rec.decode.logits, target);
  }

  SequenceLoss out;
  out.tokens = steps;
  out.loss = nll / static_cast<double>(steps);
  if (!with_grads) return out;

  out.grads = p.zeros_like();
  ModelParams& g = out.grads;
  const double inv_steps = 1.0 / static_cast<double>(steps);
  Vector d_feature(cfg.feature_dim);
  GLSTMState carry_lower = GLSTMState::zeros(cfg.feature_dim);
  GLSTMState carry_upper = GLSTMState::zeros(cfg.hidden_dim);

  for (std::size_t t = steps; t-- > 0;) {
    const StepRecord& rec = records[t];
    Vector d_logits = rec.decode.probs;
    d_logits[tokens[t + 1]] -= 1.0;
    for (double& v : d_logits.values()) v *= inv_steps;

    add_outer(g.decoder.readout, d_logits, rec.decode.hidden);
    axpy(1.0, d_logits.values(), g.decoder.readout_bias.values());
    Vector d_hidden = carry_upper.m;
    matvec_transposed_acc(p.decoder.readout, d_logits, d_hidden);

    CellInputGrads up =
        glstm_backward_acc(p.decoder.cell, rec.decode.cell, d_hidden, carry_upper.c, g.decoder.cell);
    carry_upper = std::move(up.d_prev);

    FuseGrads fuse = fuse_guidance_backward(feature, rec.mask.mask, up.d_g);
    axpy(1.0, fuse.d_feature.values(), d_feature.values());
    Vector d_lower_hidden = normalize_mask_backward(rec.mask, fuse.d_mask);
    axpy(1.0, carry_lower.m.values(), d_lower_hidden.values());

    CellInputGrads low =
        glstm_backward_acc(p.lower, rec.mask.cell, d_lower_hidden, carry_lower.c, g.lower);
    carry_lower = std::move(low.d_prev);

    if (cfg.embedding_trainable) {
      auto row = g.embedding.row(rec.token);
      axpy(1.0, up.d_x.values(), row);
      axpy(1.0, low.d_x.values(), row);
    }
  }
  if (cfg.has_projection()) add_outer(g.projection, d_feature, example.feature);
  return out;
}

SequenceLoss batch_loss(const Model& model, std::span<const ReviewExample> batch,
                        bool with_grads) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  SequenceLoss total;
  if (with_grads) total.grads = model.params.zeros_like();
  const double w = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    SequenceLoss one = sequence_loss(model, ex, with_grads);
    total.loss += w * one.loss;
    total.tokens += one.tokens;
    if (with_grads) add_into(total.grads, one.grads, w);
  }
  return total;
}

double mean_token_loss(const Model& model, std::span<const ReviewExample> data) {
  double nll = 0.0;
  std::size_t count = 0;
  for (const auto& ex : data) {
    SequenceLoss one = sequence_loss(model, ex, false);
    nll += one.loss * static_cast<double>(one.tokens);
    count += one.tokens;
  }
  return count == 0 ? 0.0 : nll / static_cast<double>(count);
}

double global_norm(const ModelParams& grads) {
  double sq = 0.0;
  for (auto v : tensor_views(grads)) sq += squared_norm(v);
  return std::sqrt(sq);
}

double clip_gradients(ModelParams& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto v : tensor_views(grads)) {
      for (double& x : v) x *= scale;
    }
  }
  return norm;
}

Optimizer::Optimizer(const TrainConfig& config, const ModelParams& shape)
    : config_(config),
      first_moment_(shape.zeros_like()),
      second_moment_(shape.zeros_like()) {}

void Optimizer::apply(ModelParams& params, const ModelParams& grads) {
  ++steps_;
  auto p = tensor_views(params);
  auto g = tensor_views(grads);
  const double lr = config_.learning_rate;
  if (config_.optimizer == OptimizerKind::kSgd) {
    for (std::size_t k = 0; k < p.size(); ++k) axpy(-lr, g[k], p[k]);
    return;
  }
  auto m = tensor_views(first_moment_);
  auto v = tensor_views(second_moment_);
  const double b1 = config_.adam_beta1;
  const double b2 = config_.adam_beta2;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      const double gi = g[k][i];
      m[k][i] = b1 * m[k][i] + (1.0 - b1) * gi;
      v[k][i] = b2 * v[k][i] + (1.0 - b2) * gi * gi;
      const double m_hat = m[k][i] / correction1;
      const double v_hat = v[k][i] / correction2;
      p[k][i] -= lr * m_hat / (std::sqrt(v_hat) + config_.adam_epsilon);
    }
  }
}

std::string to_json_line(const EpochReport& report) {
  nlohmann::json j = {{"epoch", report.epoch},
                      {"loss", report.mean_token_loss},
                      {"perplexity", report.perplexity},
                      {"seconds", report.seconds}};
  return j.dump();
}

TrainResult train(const std::vector<ReviewExample>& data, const ModelConfig& model_config,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  return train(Model::create(model_config, config.seed), data, config, on_epoch);
}

TrainResult train(Model model, const std::vector<ReviewExample>& data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  model.validate();

  TrainResult result;
  Optimizer optimizer(config, model.params);
  Rng shuffle_rng(config.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const ReviewExample*> batch;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }

    double nll = 0.0;
    std::size_t token_count = 0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      ++batch_index;
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&data[order[i]]);

      ModelParams grads = model.params.zeros_like();
      double batch_mean = 0.0;
      const double w = 1.0 / static_cast<double>(batch.size());
      for (const ReviewExample* ex : batch) {
        SequenceLoss one = sequence_loss(model, *ex, true);
        batch_mean += w * one.loss;
        nll += one.loss * static_cast<double>(one.tokens);
        token_count += one.tokens;
        add_into(grads, one.grads, w);
      }
      const double norm = clip_gradients(grads, config.grad_clip_norm);
      if (!std::isfinite(batch_mean) || !std::isfinite(norm)) {
        throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batch_index) + " (loss " +
                               std::to_string(batch_mean) + ", gradient norm " +
                               std::to_string(norm) + ")");
      }
      optimizer.apply(model.params, grads);
    }

    EpochReport report;
    report.epoch = epoch;
    report.mean_token_loss = nll / static_cast<double>(token_count);
    report.perplexity = std::exp(report.mean_token_loss);
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log_info("epoch " + std::to_string(epoch) + " loss " + std::to_string(report.mean_token_loss) +
             " ppl " + std::to_string(report.perplexity));
    result.epochs.push_back(report);
    if (on_epoch) on_epoch(model, report);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace revgen
