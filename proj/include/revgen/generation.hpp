#ifndef REVGEN_GENERATION_HPP_
#define REVGEN_GENERATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <unordered_set>
#include <vector>

#include "revgen/model.hpp"
#include "revgen/textdata.hpp"

namespace revgen {

inline constexpr std::size_t kMaxOutputLength = 100;

enum class DecodeMode { kGreedy, kBeam };

struct GenerationConfig {
  DecodeMode mode = DecodeMode::kGreedy;
  std::size_t beam_width = 1;
  /// Upper bound on emitted tokens, EOS included.
  std::size_t max_len = kMaxOutputLength;
  std::uint64_t seed = 0;  // reserved for sampling; decoding is deterministic
};

struct GeneratedReview {
  std::vector<TokenId> tokens;  // emitted ids, EOS last when finished
  std::vector<double> step_log_probs;
  double total_log_prob = 0.0;
  bool finished = false;  // ended with EOS
  std::vector<std::string> words;
  std::string text;
};

/// Next-token scorer for the bilevel model. Control tokens PAD, BOS and UNK get
/// probability zero and the rest is renormalized.
class ModelScorer {
 public:
  using State = DecodeState;

  ModelScorer(const Model& model, const Vector& raw_feature, int rating);

  std::size_t vocab_size() const { return model_.config.vocab_size; }
  TokenId eos() const { return Vocabulary::kEos; }
  State start(std::vector<double>& log_probs) const;
  void advance(State& state, TokenId token, std::vector<double>& log_probs) const;

 private:
  void masked_log_probs(const Vector& probs, std::vector<double>& out) const;

  const Model& model_;
  Vector feature_;
  Vector rating_;
};

namespace detail {

struct Candidate {
  double total;
  std::size_t parent;
  TokenId token;
};

inline bool sequence_less(const std::vector<TokenId>& a, const std::vector<TokenId>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

/// Higher total first; equal totals by ascending token sequence.
inline bool better(const GeneratedReview& a, const GeneratedReview& b) {
  if (a.total_log_prob != b.total_log_prob) return a.total_log_prob > b.total_log_prob;
  return sequence_less(a.tokens, b.tokens);
}

}  // namespace detail

/// Argmax decoding, ties broken by the lowest token id. Stops at EOS or after
/// max_len tokens.
template <typename Scorer>
GeneratedReview greedy_search(const Scorer& scorer, std::size_t max_len) {
  GeneratedReview out;
  std::vector<double> log_probs;
  auto state = scorer.start(log_probs);
  while (out.tokens.size() < max_len) {
    TokenId best = 0;
    for (TokenId k = 1; k < log_probs.size(); ++k) {
      if (log_probs[k] > log_probs[best]) best = k;
    }
    out.tokens.push_back(best);
    out.step_log_probs.push_back(log_probs[best]);
    out.total_log_prob += log_probs[best];
    if (best == scorer.eos()) {
      out.finished = true;
      break;
    }
    if (out.tokens.size() < max_len) scorer.advance(state, best, log_probs);
  }
  return out;
}

/// Length-synchronous beam search over summed log-probabilities. Each step keeps
/// the `width` best extensions of the live hypotheses; those ending in EOS or
/// reaching max_len retire into a pool. Returns the pool's best `width`
/// hypotheses, ordered by total log-probability then token sequence.
///
/// The greedy hypothesis is retired into the pool up front. Plain pruning can
/// drop the greedy prefix and finish below it; with it pooled the top result is
/// never worse than greedy.
template <typename Scorer>
std::vector<GeneratedReview> beam_search(const Scorer& scorer, std::size_t width,
                                         std::size_t max_len) {
  if (width == 0) throw std::invalid_argument("beam_search: width must be >= 1");
  struct Live {
    GeneratedReview hyp;
    typename Scorer::State state;
    std::vector<double> log_probs;
  };
  std::vector<GeneratedReview> pool{greedy_search(scorer, max_len)};
  const std::vector<TokenId> greedy_tokens = pool.front().tokens;
  std::vector<Live> live(1);
  live[0].state = scorer.start(live[0].log_probs);

  for (std::size_t len = 1; len <= max_len && !live.empty(); ++len) {
    std::vector<detail::Candidate> cands;
    for (std::size_t h = 0; h < live.size(); ++h) {
      const auto& lp = live[h].log_probs;
      for (TokenId k = 0; k < lp.size(); ++k) {
        if (lp[k] == -std::numeric_limits<double>::infinity()) continue;
        cands.push_back({live[h].hyp.total_log_prob + lp[k], h, k});
      }
    }
    auto cand_less = [&](const detail::Candidate& a, const detail::Candidate& b) {
      if (a.total != b.total) return a.total > b.total;
      const auto& pa = live[a.parent].hyp.tokens;
      const auto& pb = live[b.parent].hyp.tokens;
      if (a.parent != b.parent && pa != pb) return detail::sequence_less(pa, pb);
      return a.token < b.token;
    };
    const std::size_t keep = std::min(width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep),
                      cands.end(), cand_less);

    std::vector<Live> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const auto& c = cands[i];
      const Live& parent = live[c.parent];
      GeneratedReview hyp = parent.hyp;
      hyp.tokens.push_back(c.token);
      hyp.step_log_probs.push_back(parent.log_probs[c.token]);
      hyp.total_log_prob = c.total;
      if (c.token == scorer.eos() || len == max_len) {
        hyp.finished = c.token == scorer.eos();
        if (hyp.tokens != greedy_tokens) pool.push_back(std::move(hyp));
        continue;
      }
      Live child{std::move(hyp), parent.state, {}};
      scorer.advance(child.state, c.token, child.log_probs);
      next.push_back(std::move(child));
    }
    live = std::move(next);

    // Log-probabilities only decrease, so no live hypothesis can overtake a
    // full pool once the best of them falls below the pool's width-th entry.
    if (pool.size() >= width && !live.empty()) {
      std::sort(pool.begin(), pool.end(), detail::better);
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& l : live) best_live = std::max(best_live, l.hyp.total_log_prob);
      if (best_live < pool[width - 1].total_log_prob) break;
    }
  }
  std::sort(pool.begin(), pool.end(), detail::better);
  if (pool.size() > width) pool.resize(width);
  return pool;
}

/// Fills words and text from the token ids.
void attach_text(GeneratedReview& review, const Vocabulary& vocab);

/// Generates a review for a raw image feature and a rating in 1..5; throws
/// std::out_of_range for other ratings. Beam mode returns the best hypothesis.
GeneratedReview generate(const Model& model, const Vocabulary& vocab, const Vector& raw_feature,
                         int rating, const GenerationConfig& config = {});

/// Top-`width` hypotheses.
std::vector<GeneratedReview> generate_beam(const Model& model, const Vocabulary& vocab,
                                           const Vector& raw_feature, int rating,
                                           std::size_t width,
                                           std::size_t max_len = kMaxOutputLength);

using Lexicon = std::unordered_set<std::string>;

/// One token per line; blank lines ignored; entries lowercased.
Lexicon load_lexicon(const std::filesystem::path& path);

struct SentimentCounts {
  std::size_t positive = 0;
  std::size_t negative = 0;
};

SentimentCounts count_sentiment(const std::vector<std::string>& words, const Lexicon& positive,
                                const Lexicon& negative);

struct SentimentReport {
  GeneratedReview low;   // rating 1
  GeneratedReview high;  // rating 5
  SentimentCounts low_counts;
  SentimentCounts high_counts;
  /// (pos_5 - neg_5) - (pos_1 - neg_1), counted over generated words.
  double divergence = 0.0;

  std::string to_json() const;
};

SentimentReport sentiment_divergence(const Model& model, const Vocabulary& vocab,
                                     const Vector& raw_feature, const Lexicon& positive,
                                     const Lexicon& negative,
                                     const GenerationConfig& config = {});

/// {"tokens":[...],"token_ids":[...],"text":...,"log_probs":[...],...}
std::string generation_json(const GeneratedReview& review, int rating);

}  // namespace revgen

#endif  // REVGEN_GENERATION_HPP_
