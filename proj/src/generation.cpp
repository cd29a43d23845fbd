#include "revgen/generation.hpp"

#include <fstream>

#include <json.hpp>

namespace revgen {

ModelScorer::ModelScorer(const Model& model, const Vector& raw_feature, int rating)
    : model_(model), feature_(model.image_feature(raw_feature)), rating_(model.rating_vector(rating)) {}

void ModelScorer::masked_log_probs(const Vector& probs, std::vector<double>& out) const {
  static constexpr TokenId kMasked[] = {Vocabulary::kPad, Vocabulary::kBos, Vocabulary::kUnk};
  double removed = 0.0;
  for (TokenId id : kMasked) removed += probs[id];
  const double log_norm = std::log1p(-removed);
  out.assign(probs.size(), 0.0);
  for (std::size_t k = 0; k < probs.size(); ++k) out[k] = std::log(probs[k]) - log_norm;
  for (TokenId id : kMasked) out[id] = -std::numeric_limits<double>::infinity();
}

ModelScorer::State ModelScorer::start(std::vector<double>& log_probs) const {
  State state = model_.initial_state();
  masked_log_probs(model_.step(state, Vocabulary::kBos, feature_, rating_), log_probs);
  return state;
}

void ModelScorer::advance(State& state, TokenId token, std::vector<double>& log_probs) const {
  masked_log_probs(model_.step(state, token, feature_, rating_), log_probs);
}

void attach_text(GeneratedReview& review, const Vocabulary& vocab) {
  review.words = vocab.decode(review.tokens);
  review.text = detokenize(review.words);
}

GeneratedReview generate(const Model& model, const Vocabulary& vocab, const Vector& raw_feature,
                         int rating, const GenerationConfig& config) {
  if (vocab.size() != model.config.vocab_size) {
    throw ConfigError("vocabulary size " + std::to_string(vocab.size()) +
                      " does not match the model's " + std::to_string(model.config.vocab_size));
  }
  const ModelScorer scorer(model, raw_feature, rating);
  GeneratedReview out;
  if (config.mode == DecodeMode::kBeam) {
    out = beam_search(scorer, config.beam_width, config.max_len).front();
  } else {
    out = greedy_search(scorer, config.max_len);
  }
  attach_text(out, vocab);
  return out;
}

std::vector<GeneratedReview> generate_beam(const Model& model, const Vocabulary& vocab,
                                           const Vector& raw_feature, int rating,
                                           std::size_t width, std::size_t max_len) {
  const ModelScorer scorer(model, raw_feature, rating);
  auto hyps = beam_search(scorer, width, max_len);
  for (auto& h : hyps) attach_text(h, vocab);
  return hyps;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon " + path.string());
  Lexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    for (const auto& tok : tokenize(line)) lex.insert(tok);
  }
  return lex;
}

SentimentCounts count_sentiment(const std::vector<std::string>& words, const Lexicon& positive,
                                const Lexicon& negative) {
  SentimentCounts c;
  for (const auto& w : words) {
    c.positive += positive.count(w);
    c.negative += negative.count(w);
  }
  return c;
}

SentimentReport sentiment_divergence(const Model& model, const Vocabulary& vocab,
                                     const Vector& raw_feature, const Lexicon& positive,
                                     const Lexicon& negative, const GenerationConfig& config) {
  SentimentReport r;
  r.low = generate(model, vocab, raw_feature, 1, config);
  r.high = generate(model, vocab, raw_feature, 5, config);
  r.low_counts = count_sentiment(r.low.words, positive, negative);
  r.high_counts = count_sentiment(r.high.words, positive, negative);
  auto net = [](const SentimentCounts& c) {
    return static_cast<double>(c.positive) - static_cast<double>(c.negative);
  };
  r.divergence = net(r.high_counts) - net(r.low_counts);
  return r;
}

namespace {

nlohmann::json review_json(const GeneratedReview& review) {
  return {{"tokens", review.words},
          {"token_ids", review.tokens},
          {"text", review.text},
          {"log_probs", review.step_log_probs},
          {"total_log_prob", review.total_log_prob},
          {"finished", review.finished}};
}

nlohmann::json counts_json(const SentimentCounts& c) {
  return {{"positive", c.positive}, {"negative", c.negative}};
}

}  // namespace

std::string SentimentReport::to_json() const {
  nlohmann::json j = {
      {"rating_1", {{"generation", review_json(low)}, {"counts", counts_json(low_counts)}}},
      {"rating_5", {{"generation", review_json(high)}, {"counts", counts_json(high_counts)}}},
      {"divergence", divergence},
      {"outputs_differ", low.tokens != high.tokens}};
  return j.dump(2);
}

std::string generation_json(const GeneratedReview& review, int rating) {
  nlohmann::json j = review_json(review);
  j["rating"] = rating;
  return j.dump(2);
}

}  // namespace revgen
