#ifndef REVGEN_TEXTDATA_HPP_
#define REVGEN_TEXTDATA_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "revgen/numerics.hpp"

namespace revgen {

using TokenId = std::uint32_t;

/// Lowercases, splits on whitespace and splits each of . , ! ? ; : into its own
/// token. Apostrophes stay inside words ("don't").
std::vector<std::string> tokenize(std::string_view text);

/// Joins with spaces, attaching punctuation tokens to the preceding word.
std::string detokenize(const std::vector<std::string>& tokens);

bool is_punctuation_token(std::string_view token);

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kNumReserved = 4;

  /// Reserved tokens only.
  Vocabulary();
  /// Rebuilds a vocabulary from its id-ordered token list; the first four
  /// entries must be the reserved tokens.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  std::size_t size() const { return tokens_.size(); }
  bool contains(const std::string& token) const { return ids_.count(token) != 0; }
  /// UNK for unknown tokens.
  TokenId id(const std::string& token) const;
  /// Throws std::out_of_range for ids past the end.
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// BOS, ids..., EOS.
  std::vector<TokenId> encode(const std::vector<std::string>& tokens) const;
  /// Drops control tokens.
  std::vector<std::string> decode(const std::vector<TokenId>& ids) const;

  static bool is_reserved(const std::string& token);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Tokens with count >= min_count, ordered by (count desc, token asc) after the
/// reserved ids. Reserved spellings in the corpus are ignored.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus,
                       std::size_t min_count);

enum class RatingEncoding { kOneHot, kScalar };

inline constexpr int kMinRating = 1;
inline constexpr int kMaxRating = 5;

std::string to_string(RatingEncoding enc);
RatingEncoding parse_rating_encoding(const std::string& s);
std::size_t rating_dim(RatingEncoding enc);

/// One-hot of length 5 at index r-1, or the scalar (r-3)/2.
/// Throws std::out_of_range for ratings outside 1..5.
Vector encode_rating(int rating, RatingEncoding enc = RatingEncoding::kOneHot);

struct EmbeddingTable {
  Matrix weights;  // vocab_size x embed_dim
  bool trainable = true;
};

/// Reads "token v1 v2 ..." lines. Rows for vocabulary tokens present in the file
/// are copied; the rest are drawn uniformly from [-scale, scale].
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                               std::size_t embed_dim, double scale, Rng& rng,
                               bool trainable = false);

/// Image features keyed by product id, as stored in an IMGF file.
class FeatureTable {
 public:
  explicit FeatureTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  /// Throws DataError on duplicate ids or wrong length.
  void add(const std::string& product_id, Vector feature);
  const Vector* find(const std::string& product_id) const;
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<Vector> features_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Layout: "IMGF", u32 count, u32 dim, then per record u16 id length, id bytes,
/// dim float32 values. All integers and floats little-endian.
FeatureTable read_features(const std::filesystem::path& path);
void write_features(const std::filesystem::path& path, const FeatureTable& table);

struct ReviewExample {
  std::string product_id;
  int rating = 0;
  std::vector<TokenId> tokens;  // BOS ... EOS
  Vector feature;
};

struct DataConfig {
  std::size_t max_len = 100;
  std::size_t min_count = 5;
  /// Expected feature length; 0 accepts the file's dimension.
  std::size_t feature_dim = 0;
};

struct DropRecord {
  std::size_t line = 0;
  std::string product_id;
  std::string reason;
};

struct LoadStats {
  std::size_t records = 0;
  std::size_t kept = 0;
  std::size_t dropped_too_long = 0;
  std::size_t dropped_missing_feature = 0;
  std::vector<DropRecord> drops;
};

struct LoadedDataset {
  Vocabulary vocab;
  std::vector<ReviewExample> examples;
  FeatureTable features;  // features of kept products only
  LoadStats stats;
};

/// Reads JSON Lines reviews and IMGF features, drops reviews with more than
/// max_len tokens or without a feature, and encodes the rest. The vocabulary is
/// built from the kept reviews unless one is supplied.
LoadedDataset load_dataset(const std::filesystem::path& reviews_path,
                           const std::filesystem::path& features_path, const DataConfig& config,
                           const std::optional<Vocabulary>& vocab = std::nullopt);

/// Machine-readable summary of what load_dataset kept and dropped.
std::string load_stats_json(const LoadedDataset& data);

void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary read_vocab(const std::filesystem::path& path);

/// Prepared-data directory: vocab.txt, examples.jsonl, features.bin, stats.json.
void save_prepared(const std::filesystem::path& dir, const LoadedDataset& data);
LoadedDataset load_prepared(const std::filesystem::path& dir);

}  // namespace revgen

#endif  // REVGEN_TEXTDATA_HPP_
