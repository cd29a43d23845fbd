#include "revgen/textdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "binary_io.hpp"
#include "revgen/log.hpp"

namespace revgen {

namespace {

using nlohmann::json;

constexpr std::string_view kPunctuation = ".,!?;:";
constexpr std::string_view kFeatureMagic = "IMGF";
const std::vector<std::string> kReservedTokens = {"<pad>", "<bos>", "<eos>", "<unk>"};

bool is_space(char ch) {
  return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
}

char ascii_lower(char ch) {
  return (ch >= 'A' && ch <= 'Z') ? static_cast<char>(ch - 'A' + 'a') : ch;
}

std::string line_prefix(const std::filesystem::path& path, std::size_t line) {
  return path.filename().string() + ":" + std::to_string(line) + ": ";
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (char ch : text) {
    if (is_space(ch)) {
      flush();
    } else if (kPunctuation.find(ch) != std::string_view::npos) {
      flush();
      out.emplace_back(1, ch);
    } else {
      word.push_back(ascii_lower(ch));
    }
  }
  flush();
  return out;
}

bool is_punctuation_token(std::string_view token) {
  return token.size() == 1 && kPunctuation.find(token[0]) != std::string_view::npos;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& tok : tokens) {
    if (!out.empty() && !is_punctuation_token(tok)) out.push_back(' ');
    out += tok;
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const auto& t : kReservedTokens) add(t);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < kNumReserved ||
      !std::equal(kReservedTokens.begin(), kReservedTokens.end(), tokens.begin())) {
    throw DataError("vocabulary must start with <pad> <bos> <eos> <unk>");
  }
  Vocabulary v;
  for (std::size_t i = kNumReserved; i < tokens.size(); ++i) {
    if (is_reserved(tokens[i]) || v.contains(tokens[i])) {
      throw DataError("vocabulary has duplicate token '" + tokens[i] + "'");
    }
    v.add(tokens[i]);
  }
  return v;
}

void Vocabulary::add(const std::string& token) {
  ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(token);
}

bool Vocabulary::is_reserved(const std::string& token) {
  return std::find(kReservedTokens.begin(), kReservedTokens.end(), token) !=
         kReservedTokens.end();
}

TokenId Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size() + 2);
  ids.push_back(kBos);
  for (const auto& t : tokens) ids.push_back(id(t));
  ids.push_back(kEos);
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<TokenId>& ids) const {
  std::vector<std::string> out;
  for (TokenId id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    out.push_back(token(id));
  }
  return out;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus,
                       std::size_t min_count) {
  if (min_count < 1) throw std::invalid_argument("build_vocab: min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : corpus) {
    for (const auto& tok : seq) {
      if (!Vocabulary::is_reserved(tok)) ++counts[tok];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens = kReservedTokens;
  for (const auto& [tok, n] : kept) tokens.push_back(tok);
  return Vocabulary::from_tokens(tokens);
}

std::string to_string(RatingEncoding enc) {
  return enc == RatingEncoding::kOneHot ? "onehot" : "scalar";
}

RatingEncoding parse_rating_encoding(const std::string& s) {
  if (s == "onehot") return RatingEncoding::kOneHot;
  if (s == "scalar") return RatingEncoding::kScalar;
  throw ConfigError("unknown rating encoding '" + s + "' (expected onehot|scalar)");
}

std::size_t rating_dim(RatingEncoding enc) {
  return enc == RatingEncoding::kOneHot ? static_cast<std::size_t>(kMaxRating) : 1;
}

Vector encode_rating(int rating, RatingEncoding enc) {
  if (rating < kMinRating || rating > kMaxRating) {
    throw std::out_of_range("rating " + std::to_string(rating) + " outside 1..5");
  }
  if (enc == RatingEncoding::kScalar) return Vector{(rating - 3) / 2.0};
  Vector v(kMaxRating);
  v[static_cast<std::size_t>(rating - 1)] = 1.0;
  return v;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                               std::size_t embed_dim, double scale, Rng& rng, bool trainable) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings file " + path.string());
  EmbeddingTable table{init_matrix(vocab.size(), embed_dim, scale, rng), trainable};
  std::string line;
  std::size_t lineno = 0;
  std::size_t matched = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    std::vector<double> values;
    std::string field;
    while (ss >> field) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw DataError(line_prefix(path, lineno) + "bad embedding value '" + field + "'");
      }
    }
    if (values.size() != embed_dim) {
      throw DataError(line_prefix(path, lineno) + "expected " + std::to_string(embed_dim) +
                      " values, found " + std::to_string(values.size()));
    }
    if (!vocab.contains(token)) continue;
    auto row = table.weights.row(vocab.id(token));
    std::copy(values.begin(), values.end(), row.begin());
    ++matched;
  }
  log_info("embeddings: " + std::to_string(matched) + " of " + std::to_string(vocab.size()) +
           " vocabulary rows loaded from " + path.string());
  return table;
}

void FeatureTable::add(const std::string& product_id, Vector feature) {
  if (feature.size() != dim_) {
    throw DataError("feature for '" + product_id + "' has length " +
                    std::to_string(feature.size()) + ", expected " + std::to_string(dim_));
  }
  if (index_.count(product_id) != 0) {
    throw DataError("duplicate feature record for product '" + product_id + "'");
  }
  index_.emplace(product_id, ids_.size());
  ids_.push_back(product_id);
  features_.push_back(std::move(feature));
}

const Vector* FeatureTable::find(const std::string& product_id) const {
  auto it = index_.find(product_id);
  return it == index_.end() ? nullptr : &features_[it->second];
}

FeatureTable read_features(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw DataError("feature file not found: " + path.string());
  }
  const std::string bytes = detail::read_file_bytes(path);
  detail::ByteReader in(bytes);
  if (in.get_bytes(4) != kFeatureMagic) throw DataError(path.string() + ": not an IMGF file");
  const auto count = in.get<std::uint32_t>();
  const auto dim = in.get<std::uint32_t>();
  if (!in.ok()) throw DataError(path.string() + ": truncated header");
  if (dim == 0) throw DataError(path.string() + ": feature dimension is zero");

  FeatureTable table(dim);
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto id_len = in.get<std::uint16_t>();
    const std::string id(in.get_bytes(id_len));
    std::vector<double> values(dim);
    for (auto& v : values) v = static_cast<double>(in.get<float>());
    if (!in.ok()) {
      throw DataError(path.string() + ": truncated at record " + std::to_string(r));
    }
    table.add(id, Vector(std::move(values)));
  }
  if (in.remaining() != 0) {
    throw DataError(path.string() + ": " + std::to_string(in.remaining()) +
                    " trailing bytes after " + std::to_string(count) + " records");
  }
  return table;
}

void write_features(const std::filesystem::path& path, const FeatureTable& table) {
  detail::ByteWriter out;
  out.put_bytes(kFeatureMagic);
  out.put(static_cast<std::uint32_t>(table.size()));
  out.put(static_cast<std::uint32_t>(table.dim()));
  for (const auto& id : table.ids()) {
    if (id.size() > 0xFFFF) throw DataError("product id too long: " + id.substr(0, 32));
    out.put(static_cast<std::uint16_t>(id.size()));
    out.put_bytes(id);
    for (double v : table.find(id)->values()) out.put(static_cast<float>(v));
  }
  detail::write_file_bytes(path, out.bytes());
}

namespace {

struct RawReview {
  std::size_t line;
  std::string product_id;
  int rating;
  std::vector<std::string> tokens;
};

int parse_rating(const json& value, const std::string& where) {
  if (!value.is_number()) throw DataError(where + "rating must be a number");
  const double r = value.get<double>();
  if (!std::isfinite(r) || r != std::floor(r)) {
    throw DataError(where + "rating " + value.dump() + " is not an integer");
  }
  if (r < kMinRating || r > kMaxRating) {
    throw DataError(where + "rating " + value.dump() + " outside 1..5");
  }
  return static_cast<int>(r);
}

std::vector<RawReview> read_reviews(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open reviews file " + path.string());
  std::vector<RawReview> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), is_space)) continue;
    const std::string where = line_prefix(path, lineno);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + "malformed JSON: " + e.what());
    }
    if (!rec.is_object()) throw DataError(where + "record is not a JSON object");
    for (const char* key : {"product_id", "rating", "review"}) {
      if (!rec.contains(key)) throw DataError(where + "missing field '" + key + "'");
    }
    if (!rec["product_id"].is_string()) throw DataError(where + "product_id must be a string");
    if (!rec["review"].is_string()) throw DataError(where + "review must be a string");
    out.push_back({lineno, rec["product_id"].get<std::string>(),
                   parse_rating(rec["rating"], where),
                   tokenize(rec["review"].get<std::string>())});
  }
  return out;
}

}  // namespace

LoadedDataset load_dataset(const std::filesystem::path& reviews_path,
                           const std::filesystem::path& features_path, const DataConfig& config,
                           const std::optional<Vocabulary>& vocab) {
  FeatureTable all_features = read_features(features_path);
  if (config.feature_dim != 0 && all_features.dim() != config.feature_dim) {
    throw DataError(features_path.string() + ": feature dimension " +
                    std::to_string(all_features.dim()) + " does not match configured " +
                    std::to_string(config.feature_dim));
  }
  const std::vector<RawReview> reviews = read_reviews(reviews_path);

  LoadedDataset data;
  data.features = FeatureTable(all_features.dim());
  data.stats.records = reviews.size();
  std::vector<const RawReview*> kept;
  for (const auto& r : reviews) {
    if (r.tokens.size() > config.max_len) {
      ++data.stats.dropped_too_long;
      data.stats.drops.push_back({r.line, r.product_id,
                                  "too_long: " + std::to_string(r.tokens.size()) +
                                      " tokens > " + std::to_string(config.max_len)});
      continue;
    }
    if (all_features.find(r.product_id) == nullptr) {
      ++data.stats.dropped_missing_feature;
      data.stats.drops.push_back({r.line, r.product_id, "missing_feature"});
      continue;
    }
    kept.push_back(&r);
  }
  data.stats.kept = kept.size();

  if (vocab) {
    data.vocab = *vocab;
  } else {
    std::vector<std::vector<std::string>> corpus;
    corpus.reserve(kept.size());
    for (const auto* r : kept) corpus.push_back(r->tokens);
    data.vocab = build_vocab(corpus, config.min_count);
  }

  for (const auto* r : kept) {
    const Vector& f = *all_features.find(r->product_id);
    data.examples.push_back({r->product_id, r->rating, data.vocab.encode(r->tokens), f});
    if (data.features.find(r->product_id) == nullptr) data.features.add(r->product_id, f);
  }

  log_info("loaded " + std::to_string(data.stats.kept) + " of " +
           std::to_string(data.stats.records) + " reviews; dropped " +
           std::to_string(data.stats.dropped_too_long) + " too long, " +
           std::to_string(data.stats.dropped_missing_feature) + " without features");
  for (const auto& d : data.stats.drops) {
    log_info("  drop line " + std::to_string(d.line) + " (" + d.product_id + "): " + d.reason);
  }
  log_info("vocabulary size " + std::to_string(data.vocab.size()));
  return data;
}

void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::string out;
  for (const auto& t : vocab.tokens()) out += t + "\n";
  detail::write_file_bytes(path, out);
}

Vocabulary read_vocab(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocabulary::from_tokens(tokens);
}

std::string load_stats_json(const LoadedDataset& data) {
  json drops = json::array();
  for (const auto& d : data.stats.drops) {
    drops.push_back({{"line", d.line}, {"product_id", d.product_id}, {"reason", d.reason}});
  }
  json j = {{"records", data.stats.records},
            {"kept", data.stats.kept},
            {"dropped", data.stats.dropped_too_long + data.stats.dropped_missing_feature},
            {"dropped_too_long", data.stats.dropped_too_long},
            {"dropped_missing_feature", data.stats.dropped_missing_feature},
            {"drops", drops},
            {"vocab_size", data.vocab.size()},
            {"feature_dim", data.features.dim()}};
  return j.dump(2);
}

void save_prepared(const std::filesystem::path& dir, const LoadedDataset& data) {
  std::filesystem::create_directories(dir);
  write_vocab(dir / "vocab.txt", data.vocab);
  write_features(dir / "features.bin", data.features);
  std::string lines;
  for (const auto& ex : data.examples) {
    json j = {{"product_id", ex.product_id}, {"rating", ex.rating}, {"tokens", ex.tokens}};
    lines += j.dump() + "\n";
  }
  detail::write_file_bytes(dir / "examples.jsonl", lines);
  detail::write_file_bytes(dir / "stats.json", load_stats_json(data) + "\n");
}

LoadedDataset load_prepared(const std::filesystem::path& dir) {
  LoadedDataset data;
  data.vocab = read_vocab(dir / "vocab.txt");
  data.features = read_features(dir / "features.bin");
  const auto path = dir / "examples.jsonl";
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = line_prefix(path, lineno);
    ReviewExample ex;
    try {
      const json j = json::parse(line);
      ex.product_id = j.at("product_id").get<std::string>();
      ex.rating = parse_rating(j.at("rating"), where);
      ex.tokens = j.at("tokens").get<std::vector<TokenId>>();
    } catch (const json::exception& e) {
      throw DataError(where + e.what());
    }
    if (ex.tokens.size() < 2 || ex.tokens.front() != Vocabulary::kBos ||
        ex.tokens.back() != Vocabulary::kEos) {
      throw DataError(where + "token sequence must be BOS ... EOS");
    }
    for (TokenId id : ex.tokens) {
      if (id >= data.vocab.size()) throw DataError(where + "token id out of vocabulary");
    }
    const Vector* f = data.features.find(ex.product_id);
    if (f == nullptr) throw DataError(where + "no feature for product '" + ex.product_id + "'");
    ex.feature = *f;
    data.examples.push_back(std::move(ex));
  }
  data.stats.records = data.stats.kept = data.examples.size();
  return data;
}

}  // namespace revgen
