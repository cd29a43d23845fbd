// Command-line front end: data preparation, training, gradient checking,
// generation and sentiment evaluation. Payloads go to stdout as JSON, logs to
// stderr.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "revgen/checkpoint.hpp"
#include "revgen/generation.hpp"
#include "revgen/gradcheck.hpp"
#include "revgen/log.hpp"
#include "revgen/textdata.hpp"
#include "revgen/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct PrepareArgs {
  std::string reviews, features, out;
  std::size_t min_count = 5;
  std::size_t max_len = 100;
  std::size_t feature_dim = 0;
};

struct TrainArgs {
  std::string data, out, report, embeddings;
  revgen::TrainConfig config;
  std::string optimizer = "adam";
  std::string mask_norm = "none";
  std::string rating_encoding = "onehot";
  bool output_tanh = false;
};

struct GradcheckArgs {
  std::uint64_t seed = 0;
  std::size_t dims = 4;
};

struct FeatureArgs {
  std::string feature_id, feature_file, features;
};

struct GenerateArgs {
  std::string ckpt;
  FeatureArgs feature;
  int rating = 0;
  std::size_t beam = 1;
  std::size_t max_len = revgen::kMaxOutputLength;
  std::uint64_t seed = 0;
};

struct SentimentArgs {
  std::string ckpt, pos, neg;
  FeatureArgs feature;
  std::size_t max_len = revgen::kMaxOutputLength;
};

void add_feature_options(CLI::App* cmd, FeatureArgs& args) {
  auto* id = cmd->add_option("--feature-id", args.feature_id, "Product id to look up");
  auto* file = cmd->add_option("--feature-file", args.feature_file,
                               "Text file of whitespace-separated feature values");
  id->excludes(file);
  cmd->add_option("--features", args.features, "IMGF feature file used with --feature-id");
}

revgen::Vector resolve_feature(const FeatureArgs& args) {
  if (!args.feature_file.empty()) {
    std::ifstream in(args.feature_file);
    if (!in) throw revgen::DataError("cannot open feature file " + args.feature_file);
    std::vector<double> values;
    std::string field;
    while (in >> field) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != field.size()) {
        throw revgen::DataError(args.feature_file + ": bad feature value '" + field + "'");
      }
      values.push_back(v);
    }
    return revgen::Vector(std::move(values));
  }
  if (args.feature_id.empty()) {
    throw std::invalid_argument("one of --feature-id or --feature-file is required");
  }
  if (args.features.empty()) throw std::invalid_argument("--feature-id needs --features PATH");
  const revgen::FeatureTable table = revgen::read_features(args.features);
  const revgen::Vector* f = table.find(args.feature_id);
  if (f == nullptr) {
    throw revgen::DataError("product '" + args.feature_id + "' not found in " + args.features);
  }
  return *f;
}

int run_prepare(const PrepareArgs& args) {
  revgen::DataConfig cfg;
  cfg.min_count = args.min_count;
  cfg.max_len = args.max_len;
  cfg.feature_dim = args.feature_dim;
  const auto data = revgen::load_dataset(args.reviews, args.features, cfg);
  revgen::save_prepared(args.out, data);
  std::cout << revgen::load_stats_json(data) << '\n';
  return 0;
}

int run_train(TrainArgs args) {
  args.config.optimizer = revgen::parse_optimizer(args.optimizer);
  args.config.validate();
  const revgen::LoadedDataset data = revgen::load_prepared(args.data);
  if (data.examples.empty()) throw std::invalid_argument("no training examples in " + args.data);

  revgen::ModelConfig mc =
      revgen::model_config_for(args.config, data.vocab.size(), data.features.dim());
  mc.mask_norm = revgen::parse_mask_norm(args.mask_norm);
  mc.rating_encoding = revgen::parse_rating_encoding(args.rating_encoding);
  mc.output_tanh = args.output_tanh;
  revgen::Model model = revgen::Model::create(mc, args.config.seed);
  if (!args.embeddings.empty()) {
    revgen::Rng rng(args.config.seed ^ 0xE1BEDULL);
    auto table = revgen::load_embeddings(args.embeddings, data.vocab, mc.embed_dim,
                                         mc.init_scale, rng);
    model.params.embedding = std::move(table.weights);
    model.config.embedding_trainable = table.trainable;
  }

  const std::string report_path = args.report.empty() ? args.out + ".report.jsonl" : args.report;
  std::ofstream report(report_path, std::ios::trunc);
  if (!report) throw std::runtime_error("cannot write report " + report_path);

  auto on_epoch = [&](const revgen::Model& m, const revgen::EpochReport& r) {
    report << revgen::to_json_line(r) << '\n' << std::flush;
    revgen::save_checkpoint(args.out, {m, data.vocab, args.config});
  };
  const auto result = revgen::train(std::move(model), data.examples, args.config, on_epoch);

  const auto& last = result.epochs.back();
  json summary = {{"checkpoint", args.out},
                  {"report", report_path},
                  {"epochs", result.epochs.size()},
                  {"examples", data.examples.size()},
                  {"vocab_size", data.vocab.size()},
                  {"parameters", result.model.params.parameter_count()},
                  {"final_loss", last.mean_token_loss},
                  {"final_perplexity", last.perplexity}};
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_gradcheck(const GradcheckArgs& args) {
  const auto report = revgen::gradcheck(revgen::GradCheckDims::uniform(args.dims), args.seed);
  std::cout << report.to_json() << '\n';
  return report.passed() ? 0 : kExitFailure;
}

int run_generate(const GenerateArgs& args) {
  const revgen::Checkpoint ckpt = revgen::load_checkpoint(args.ckpt);
  const revgen::Vector feature = resolve_feature(args.feature);
  if (args.beam <= 1) {
    revgen::GenerationConfig cfg;
    cfg.max_len = args.max_len;
    cfg.seed = args.seed;
    const auto review = revgen::generate(ckpt.model, ckpt.vocab, feature, args.rating, cfg);
    std::cout << revgen::generation_json(review, args.rating) << '\n';
    return 0;
  }
  const auto hyps = revgen::generate_beam(ckpt.model, ckpt.vocab, feature, args.rating,
                                          args.beam, args.max_len);
  json out = json::parse(revgen::generation_json(hyps.front(), args.rating));
  out["beam_width"] = args.beam;
  out["hypotheses"] = json::array();
  for (const auto& h : hyps) out["hypotheses"].push_back(json::parse(revgen::generation_json(h, args.rating)));
  std::cout << out.dump(2) << '\n';
  return 0;
}

int run_sentiment(const SentimentArgs& args) {
  const revgen::Checkpoint ckpt = revgen::load_checkpoint(args.ckpt);
  const revgen::Vector feature = resolve_feature(args.feature);
  revgen::GenerationConfig cfg;
  cfg.max_len = args.max_len;
  const auto report = revgen::sentiment_divergence(ckpt.model, ckpt.vocab, feature,
                                                   revgen::load_lexicon(args.pos),
                                                   revgen::load_lexicon(args.neg), cfg);
  std::cout << report.to_json() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rating-guided review generation with a bilevel guided LSTM"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* prepare_cmd = app.add_subcommand("prepare-data", "Tokenize, filter and encode a corpus");
  prepare_cmd->add_option("--reviews", prep.reviews, "Reviews JSON Lines file")->required();
  prepare_cmd->add_option("--features", prep.features, "IMGF feature file")->required();
  prepare_cmd->add_option("--out", prep.out, "Output directory")->required();
  prepare_cmd->add_option("--min-count", prep.min_count, "Minimum token count")->capture_default_str();
  prepare_cmd->add_option("--max-len", prep.max_len, "Maximum review length in tokens")->capture_default_str();
  prepare_cmd->add_option("--feature-dim", prep.feature_dim, "Required feature length (0: any)")->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a prepared directory");
  train_cmd->add_option("--data", tr.data, "Directory written by prepare-data")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint path (rewritten every epoch)")->required();
  train_cmd->add_option("--epochs", tr.config.epochs)->capture_default_str();
  train_cmd->add_option("--lr", tr.config.learning_rate)->capture_default_str();
  train_cmd->add_option("--optimizer", tr.optimizer, "sgd|adam")->capture_default_str();
  train_cmd->add_option("--seed", tr.config.seed)->capture_default_str();
  train_cmd->add_option("--feat-dim", tr.config.feature_dim)->capture_default_str();
  train_cmd->add_option("--hidden-dim", tr.config.hidden_dim)->capture_default_str();
  train_cmd->add_option("--embed-dim", tr.config.embed_dim)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.config.batch_size)->capture_default_str();
  train_cmd->add_option("--clip", tr.config.grad_clip_norm, "Global gradient-norm limit")->capture_default_str();
  train_cmd->add_option("--report", tr.report, "Per-epoch JSON Lines report (default CKPT.report.jsonl)");
  train_cmd->add_option("--embeddings", tr.embeddings, "Pre-trained embeddings, 'token v1 v2 ...' per line");
  train_cmd->add_option("--mask-norm", tr.mask_norm, "none|softmax|sigmoid")->capture_default_str();
  train_cmd->add_option("--rating-encoding", tr.rating_encoding, "onehot|scalar")->capture_default_str();
  train_cmd->add_flag("--output-tanh", tr.output_tanh, "Use m_t = o_t * tanh(c_t)");

  GradcheckArgs gc;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic and numeric gradients");
  grad_cmd->add_option("--seed", gc.seed)->capture_default_str();
  grad_cmd->add_option("--dims", gc.dims, "Size of every dimension (1..8)")->capture_default_str();

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Generate a review for a feature and rating");
  gen_cmd->add_option("--ckpt", gen.ckpt, "Checkpoint")->required();
  add_feature_options(gen_cmd, gen.feature);
  gen_cmd->add_option("--rating", gen.rating, "Rating 1..5")->required();
  gen_cmd->add_option("--beam", gen.beam, "Beam width (1: greedy)")->capture_default_str();
  gen_cmd->add_option("--max-len", gen.max_len)->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();

  SentimentArgs se;
  auto* sent_cmd = app.add_subcommand("eval-sentiment", "Contrast rating-1 and rating-5 generations");
  sent_cmd->add_option("--ckpt", se.ckpt, "Checkpoint")->required();
  add_feature_options(sent_cmd, se.feature);
  sent_cmd->add_option("--pos", se.pos, "Positive lexicon")->required();
  sent_cmd->add_option("--neg", se.neg, "Negative lexicon")->required();
  sent_cmd->add_option("--max-len", se.max_len)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*prepare_cmd) return run_prepare(prep);
    if (*train_cmd) return run_train(tr);
    if (*grad_cmd) return run_gradcheck(gc);
    if (*gen_cmd) return run_generate(gen);
    if (*sent_cmd) return run_sentiment(se);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
