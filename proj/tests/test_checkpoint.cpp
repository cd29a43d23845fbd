#include <doctest.h>

#include <cstring>

#include <json.hpp>

#include "revgen/checkpoint.hpp"
#include "revgen/generation.hpp"
#include "support.hpp"

using namespace revgen;

namespace {

Checkpoint sample_checkpoint(std::uint64_t seed = 0, bool projection = true) {
  ModelConfig cfg;
  cfg.vocab_size = 9;
  cfg.embed_dim = 3;
  cfg.raw_feature_dim = projection ? 6 : 4;
  cfg.feature_dim = 4;
  cfg.hidden_dim = 5;
  cfg.init_scale = 0.5;
  Checkpoint c;
  c.model = Model::create(cfg, seed);
  std::vector<std::string> tokens = {"<pad>", "<bos>", "<eos>", "<unk>", "a", "b", "c", "d", "."};
  c.vocab = Vocabulary::from_tokens(tokens);
  c.train_config.epochs = 7;
  c.train_config.seed = seed;
  return c;
}

std::uint32_t read_u32(const std::string& b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[at + i]);
  return v;
}

}  // namespace

TEST_CASE("round trip reproduces every tensor exactly") {
  for (bool projection : {true, false}) {
    const Checkpoint c = sample_checkpoint(3, projection);
    const Checkpoint back = parse_checkpoint(serialize_checkpoint(c));
    CHECK(back.vocab == c.vocab);
    CHECK(back.train_config.epochs == 7);
    CHECK(back.model.config.raw_feature_dim == c.model.config.raw_feature_dim);
    const auto a = tensor_views(c.model.params);
    const auto b = tensor_views(back.model.params);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      REQUIRE(a[k].size() == b[k].size());
      CHECK(std::memcmp(a[k].data(), b[k].data(), a[k].size() * sizeof(double)) == 0);
    }
  }
}

TEST_CASE("save, load, save gives identical bytes") {
  revgen_test::TempDir dir;
  save_checkpoint(dir / "a.ckpt", sample_checkpoint());
  save_checkpoint(dir / "b.ckpt", load_checkpoint(dir / "a.ckpt"));
  CHECK(revgen_test::slurp(dir / "a.ckpt") == revgen_test::slurp(dir / "b.ckpt"));
  CHECK_FALSE(std::filesystem::exists(dir / "a.ckpt.tmp"));
}

TEST_CASE("loaded model generates the same tokens") {
  revgen_test::TempDir dir;
  const Checkpoint c = sample_checkpoint(5);
  save_checkpoint(dir / "m.ckpt", c);
  const Checkpoint back = load_checkpoint(dir / "m.ckpt");
  const Vector f{0.3, -1, 0.2, 0.8, 0.0, 1.5};
  for (int r = 1; r <= 5; ++r) {
    const auto a = generate(c.model, c.vocab, f, r);
    const auto b = generate(back.model, back.vocab, f, r);
    CHECK(a.tokens == b.tokens);
    CHECK(a.step_log_probs == b.step_log_probs);
  }
}

TEST_CASE("header is readable JSON with a tensor manifest") {
  const std::string bytes = serialize_checkpoint(sample_checkpoint());
  CHECK(bytes.substr(0, 4) == "RGCK");
  CHECK(read_u32(bytes, 4) == kCheckpointVersion);
  std::uint64_t len = 0;
  for (int i = 7; i >= 0; --i) len = (len << 8) | static_cast<unsigned char>(bytes[8 + i]);
  const auto header = nlohmann::json::parse(bytes.substr(16, len));
  CHECK(header["tensors"][0]["name"] == "embedding");
  CHECK(header["tensors"][1]["name"] == "projection");
  CHECK(header["vocab"].size() == 9);
  CHECK(header["model_config"]["mask_norm"] == "none");
}

TEST_CASE("corruption is detected and classified") {
  const std::string good = serialize_checkpoint(sample_checkpoint());

  std::string flipped = good;
  flipped[good.size() - 40] ^= 0x01;  // inside the payload
  CHECK_THROWS_AS(parse_checkpoint(flipped), ChecksumError);

  std::string crc = good;
  crc.back() ^= 0x80;
  CHECK_THROWS_AS(parse_checkpoint(crc), ChecksumError);

  CHECK_THROWS_AS(parse_checkpoint(good.substr(0, good.size() - 9)), TruncatedError);
  CHECK_THROWS_AS(parse_checkpoint(good.substr(0, 10)), TruncatedError);
  CHECK_THROWS_AS(parse_checkpoint(good.substr(0, 30)), TruncatedError);

  std::string version = good;
  version[4] = 2;
  try {
    parse_checkpoint(version);
    FAIL("expected VersionError");
  } catch (const VersionError& e) {
    CHECK(std::string(e.what()).find("version 2") != std::string::npos);
  }

  std::string magic = good;
  magic[0] = 'X';
  CHECK_THROWS_AS(parse_checkpoint(magic), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(good + "junk"), FormatError);

  // Every single-byte flip anywhere must be rejected.
  std::size_t rejected = 0, positions = 0;
  for (std::size_t at = 0; at < good.size(); at += 7) {
    std::string bad = good;
    bad[at] ^= 0x10;
    ++positions;
    try {
      parse_checkpoint(bad);
    } catch (const CheckpointError&) {
      ++rejected;
    }
  }
  CHECK(rejected == positions);
}

TEST_CASE("missing checkpoint file") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/model.ckpt"), CheckpointError);
}
