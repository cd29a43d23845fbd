#ifndef REVGEN_TRAINING_HPP_
#define REVGEN_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "revgen/model.hpp"
#include "revgen/textdata.hpp"

namespace revgen {

enum class OptimizerKind { kSgd, kAdam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& s);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 1;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double grad_clip_norm = 5.0;
  std::uint64_t seed = 0;
  std::size_t max_len = 100;
  std::size_t feature_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t embed_dim = 32;
  std::size_t min_count = 5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Model shape implied by a training configuration and the data.
ModelConfig model_config_for(const TrainConfig& config, std::size_t vocab_size,
                             std::size_t raw_feature_dim);

struct SequenceLoss {
  double loss = 0.0;       // mean negative log-likelihood per predicted token
  std::size_t tokens = 0;  // number of predicted tokens
  ModelParams grads;       // empty unless requested
};

/// Teacher-forced cross-entropy of tokens[1..] given tokens[..T-1]; with
/// `with_grads` also runs full backpropagation through time.
SequenceLoss sequence_loss(const Model& model, const ReviewExample& example,
                           bool with_grads = true);

/// Mean of the per-example losses and gradients.
SequenceLoss batch_loss(const Model& model, std::span<const ReviewExample> batch,
                        bool with_grads = true);

/// Token-weighted mean cross-entropy over a dataset.
double mean_token_loss(const Model& model, std::span<const ReviewExample> data);

double global_norm(const ModelParams& grads);
/// Rescales grads so their global norm is at most max_norm. Returns the norm
/// before clipping.
double clip_gradients(ModelParams& grads, double max_norm);

class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const ModelParams& shape);
  void apply(ModelParams& params, const ModelParams& grads);
  std::size_t steps() const { return steps_; }

 private:
  TrainConfig config_;
  ModelParams first_moment_;
  ModelParams second_moment_;
  std::size_t steps_ = 0;
};

struct EpochReport {
  std::size_t epoch = 0;
  double mean_token_loss = 0.0;
  double perplexity = 0.0;
  double seconds = 0.0;
};

/// One JSON object, e.g. {"epoch":1,"loss":...,"perplexity":...,"seconds":...}.
std::string to_json_line(const EpochReport& report);

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  Model model;
  std::vector<EpochReport> epochs;
};

using EpochCallback = std::function<void(const Model&, const EpochReport&)>;

/// Seeded, deterministic training loop: fixed shuffle per epoch, per-batch
/// gradient averaging, global-norm clipping, then the optimizer update. Throws
/// TrainingDiverged naming the epoch and batch if the loss stops being finite.
TrainResult train(const std::vector<ReviewExample>& data, const ModelConfig& model_config,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Continues training an existing model.
TrainResult train(Model model, const std::vector<ReviewExample>& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace revgen

#endif  // REVGEN_TRAINING_HPP_
