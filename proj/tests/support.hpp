// Shared helpers and independent oracles for the test binaries. Nothing here
// calls into the library's math; oracles are written out longhand.

#ifndef REVGEN_TESTS_SUPPORT_HPP_
#define REVGEN_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "revgen/model.hpp"

namespace revgen_test {

using revgen::TokenId;

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(REVGEN_FIXTURES_DIR) / rel;
}

/// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("revgen_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void dump(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline Mat to_mat(const revgen::Matrix& m) {
  Mat out(m.rows(), Vec(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

inline Vec to_vec(const revgen::Vector& v) { return {v.values().begin(), v.values().end()}; }

// The bit-exact oracles use this scalar sigmoid; identical rounding is needed
// to compare with ==, so the two branches mirror the library's stable form.
inline double ref_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Vec ref_softmax(const Vec& z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  Vec out(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

/// Plain LSTM without any guidance input, m = o * c, optional cell clipping.
struct ReferenceLstm {
  Mat wx[4], wm[4];  // i, f, o, candidate
  Vec b[4];
  bool clip = true;
  double clip_value = 50.0;

  static ReferenceLstm from(const revgen::GLSTMParams& p, bool clip, double clip_value) {
    ReferenceLstm r;
    for (int k = 0; k < 4; ++k) {
      r.wx[k] = to_mat(p.gates[k].from_input);
      r.wm[k] = to_mat(p.gates[k].from_hidden);
      r.b[k] = to_vec(p.gates[k].bias);
    }
    r.clip = clip;
    r.clip_value = clip_value;
    return r;
  }

  void step(const Vec& x, Vec& m, Vec& c) const {
    const std::size_t n = b[0].size();
    Vec act[4];
    for (int k = 0; k < 4; ++k) {
      act[k].resize(n);
      for (std::size_t j = 0; j < n; ++j) {
        double sx = 0.0;
        for (std::size_t q = 0; q < x.size(); ++q) sx += wx[k][j][q] * x[q];
        double sm = 0.0;
        for (std::size_t q = 0; q < n; ++q) sm += wm[k][j][q] * m[q];
        const double pre = sx + sm + b[k][j];
        act[k][j] = k == 3 ? std::tanh(pre) : ref_sigmoid(pre);
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      double cj = act[1][j] * c[j] + act[0][j] * act[3][j];
      if (clip) cj = std::clamp(cj, -clip_value, clip_value);
      c[j] = cj;
      m[j] = act[2][j] * cj;
    }
  }
};

/// Embedding lookup, guidance-free LSTM and softmax readout. Matches the
/// bilevel model whenever every guidance weight is zero.
inline std::vector<Vec> reference_rollout(const revgen::Model& model,
                                          const std::vector<TokenId>& tokens) {
  const auto& cfg = model.config;
  const ReferenceLstm lstm = ReferenceLstm::from(model.params.decoder.cell, cfg.clip_cell,
                                                 cfg.cell_clip);
  const Mat wy = to_mat(model.params.decoder.readout);
  const Vec by = to_vec(model.params.decoder.readout_bias);
  Vec m(cfg.hidden_dim, 0.0), c(cfg.hidden_dim, 0.0);
  std::vector<Vec> out;
  for (TokenId tok : tokens) {
    Vec x(cfg.embed_dim);
    for (std::size_t d = 0; d < cfg.embed_dim; ++d) x[d] = model.params.embedding(tok, d);
    lstm.step(x, m, c);
    Vec logits(by.size());
    for (std::size_t v = 0; v < by.size(); ++v) {
      double s = 0.0;
      for (std::size_t j = 0; j < m.size(); ++j) s += wy[v][j] * m[j];
      logits[v] = by[v] + s;
    }
    out.push_back(ref_softmax(logits));
  }
  return out;
}

/// Guided cell written gate by gate from the defining equations, one unit at a
/// time. No clipping; compare within a tolerance.
struct Eq2Result {
  Vec i, f, o, cand, c, m;
};

inline Eq2Result eq2_oracle(const revgen::GLSTMParams& p, const Vec& x, const Vec& g,
                            const Vec& m_prev, const Vec& c_prev) {
  const std::size_t n = m_prev.size();
  Eq2Result r;
  for (auto* v : {&r.i, &r.f, &r.o, &r.cand, &r.c, &r.m}) v->assign(n, 0.0);
  auto affine = [&](int k, std::size_t j) {
    const auto& w = p.gates[k];
    long double s = w.bias[j];
    for (std::size_t q = 0; q < x.size(); ++q) s += (long double)w.from_input(j, q) * x[q];
    for (std::size_t q = 0; q < n; ++q) s += (long double)w.from_hidden(j, q) * m_prev[q];
    for (std::size_t q = 0; q < g.size(); ++q) s += (long double)w.from_guidance(j, q) * g[q];
    return s;
  };
  for (std::size_t j = 0; j < n; ++j) {
    r.i[j] = static_cast<double>(1.0L / (1.0L + std::exp(-affine(0, j))));
    r.f[j] = static_cast<double>(1.0L / (1.0L + std::exp(-affine(1, j))));
    r.o[j] = static_cast<double>(1.0L / (1.0L + std::exp(-affine(2, j))));
    r.cand[j] = static_cast<double>(std::tanh(affine(3, j)));
    r.c[j] = r.f[j] * c_prev[j] + r.i[j] * r.cand[j];
    r.m[j] = r.o[j] * r.c[j];
  }
  return r;
}

/// First-order Markov scorer over a tiny vocabulary, for search tests.
/// table[0] is the start distribution, table[1 + t] follows token t.
class MarkovScorer {
 public:
  using State = TokenId;

  MarkovScorer(std::vector<Vec> probs, TokenId eos) : eos_(eos) {
    for (auto& row : probs) {
      Vec lp(row.size());
      for (std::size_t k = 0; k < row.size(); ++k) {
        lp[k] = row[k] > 0 ? std::log(row[k]) : -std::numeric_limits<double>::infinity();
      }
      table_.push_back(std::move(lp));
    }
  }

  std::size_t vocab_size() const { return table_[0].size(); }
  TokenId eos() const { return eos_; }
  State start(std::vector<double>& lp) const {
    lp = table_[0];
    return 0;
  }
  void advance(State& s, TokenId tok, std::vector<double>& lp) const {
    s = tok;
    lp = table_[1 + tok];
  }

 private:
  std::vector<Vec> table_;
  TokenId eos_;
};

struct Sequence {
  std::vector<TokenId> tokens;
  double log_prob = 0.0;
};

/// Every complete output of length <= max_len: sequences ending in EOS, plus
/// those cut off at max_len. Sorted best first, ties by token order.
template <typename Scorer>
std::vector<Sequence> enumerate_outputs(const Scorer& scorer, std::size_t max_len) {
  std::vector<Sequence> done;
  std::function<void(typename Scorer::State, const std::vector<double>&, Sequence)> walk =
      [&](typename Scorer::State state, const std::vector<double>& lp, Sequence prefix) {
        for (TokenId k = 0; k < lp.size(); ++k) {
          if (std::isinf(lp[k])) continue;
          Sequence next = prefix;
          next.tokens.push_back(k);
          next.log_prob += lp[k];
          if (k == scorer.eos() || next.tokens.size() == max_len) {
            done.push_back(next);
            continue;
          }
          auto s = state;
          std::vector<double> child;
          scorer.advance(s, k, child);
          walk(s, child, next);
        }
      };
  std::vector<double> lp;
  auto s = scorer.start(lp);
  walk(s, lp, {});
  std::sort(done.begin(), done.end(), [](const Sequence& a, const Sequence& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.tokens < b.tokens;
  });
  return done;
}

/// Vocabulary {0: EOS, 1: a, 2: b}. Greedy takes b, b, b while the best
/// output is a, EOS; a width-2 beam finds it.
inline MarkovScorer toy_beam_model() {
  return MarkovScorer({{1.0 / 9, 3.0 / 9, 5.0 / 9},
                       {1.0 / 3, 1.0 / 3, 1.0 / 3},  // unused: EOS never advances
                       {9.0 / 11, 1.0 / 11, 1.0 / 11},
                       {4.0 / 15, 2.0 / 15, 9.0 / 15}},
                      0);
}

/// Small random model with random biases so nothing is symmetric.
inline revgen::Model random_model(std::uint64_t seed, std::size_t vocab = 7, std::size_t dim = 4,
                                  double scale = 0.8) {
  revgen::ModelConfig cfg;
  cfg.vocab_size = vocab;
  cfg.embed_dim = dim;
  cfg.raw_feature_dim = dim;
  cfg.feature_dim = dim;
  cfg.hidden_dim = dim + 1;
  cfg.init_scale = scale;
  revgen::Model m = revgen::Model::create(cfg, seed);
  revgen::Rng rng(seed + 1000);
  for (auto* cell : {&m.params.lower, &m.params.decoder.cell}) {
    for (auto& gate : cell->gates) gate.bias = revgen::init_vector(gate.bias.size(), 0.5, rng);
  }
  m.params.decoder.readout_bias = revgen::init_vector(vocab, 1.0, rng);
  return m;
}

}  // namespace revgen_test

#endif  // REVGEN_TESTS_SUPPORT_HPP_
