#include "revgen/checkpoint.hpp"

#include <zlib.h>

#include <json.hpp>

#include "binary_io.hpp"

namespace revgen {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "RGCK";
constexpr std::size_t kPreambleBytes = 4 + 4 + 8;
constexpr std::size_t kCrcBytes = 4;

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t left = bytes.size();
  while (left > 0) {
    const uInt n = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = crc32(crc, p, n);
    p += n;
    left -= n;
  }
  return static_cast<std::uint32_t>(crc);
}

json model_config_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size},
          {"embed_dim", c.embed_dim},
          {"raw_feature_dim", c.raw_feature_dim},
          {"feature_dim", c.feature_dim},
          {"hidden_dim", c.hidden_dim},
          {"rating_encoding", to_string(c.rating_encoding)},
          {"mask_norm", to_string(c.mask_norm)},
          {"output_tanh", c.output_tanh},
          {"clip_cell", c.clip_cell},
          {"cell_clip", c.cell_clip},
          {"init_scale", c.init_scale},
          {"embedding_trainable", c.embedding_trainable}};
}

ModelConfig model_config_from(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.raw_feature_dim = j.at("raw_feature_dim").get<std::size_t>();
  c.feature_dim = j.at("feature_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.rating_encoding = parse_rating_encoding(j.at("rating_encoding").get<std::string>());
  c.mask_norm = parse_mask_norm(j.at("mask_norm").get<std::string>());
  c.output_tanh = j.at("output_tanh").get<bool>();
  c.clip_cell = j.at("clip_cell").get<bool>();
  c.cell_clip = j.at("cell_clip").get<double>();
  c.init_scale = j.at("init_scale").get<double>();
  c.embedding_trainable = j.at("embedding_trainable").get<bool>();
  return c;
}

json train_config_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"optimizer", to_string(c.optimizer)},
          {"grad_clip_norm", c.grad_clip_norm},
          {"seed", c.seed},
          {"max_len", c.max_len},
          {"feature_dim", c.feature_dim},
          {"hidden_dim", c.hidden_dim},
          {"embed_dim", c.embed_dim},
          {"min_count", c.min_count},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_epsilon", c.adam_epsilon}};
}

TrainConfig train_config_from(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.feature_dim = j.at("feature_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.min_count = j.at("min_count").get<std::size_t>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_epsilon = j.at("adam_epsilon").get<double>();
  return c;
}

template <typename T>
std::vector<std::size_t> shape_of(const T& t) {
  if constexpr (std::is_same_v<T, Matrix>) {
    return {t.rows(), t.cols()};
  } else {
    return {t.size()};
  }
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  ckpt.model.validate();
  if (ckpt.vocab.size() != ckpt.model.config.vocab_size) {
    throw CheckpointError("vocabulary size does not match the model");
  }
  json tensors = json::array();
  std::size_t payload_values = 0;
  ckpt.model.params.visit([&](const std::string& name, const auto& t) {
    tensors.push_back({{"name", name}, {"shape", shape_of(t)}});
    payload_values += t.size();
  });
  const json header = {{"model_config", model_config_json(ckpt.model.config)},
                       {"train_config", train_config_json(ckpt.train_config)},
                       {"vocab", ckpt.vocab.tokens()},
                       {"tensors", tensors},
                       {"payload_bytes", payload_values * sizeof(double)}};
  const std::string header_text = header.dump();

  detail::ByteWriter out;
  out.put_bytes(kMagic);
  out.put(kCheckpointVersion);
  out.put(static_cast<std::uint64_t>(header_text.size()));
  out.put_bytes(header_text);
  ckpt.model.params.visit([&](const std::string&, const auto& t) {
    for (double v : t.values()) out.put(v);
  });
  out.put(crc32_of(out.bytes()));
  return std::move(out.bytes());
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kPreambleBytes + kCrcBytes) {
    throw TruncatedError("checkpoint truncated: " + std::to_string(bytes.size()) + " bytes");
  }
  detail::ByteReader in(bytes);
  if (in.get_bytes(4) != kMagic) throw FormatError("not a checkpoint file (bad magic)");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint format version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = in.get<std::uint64_t>();
  if (header_len > bytes.size() - kPreambleBytes - kCrcBytes) {
    throw TruncatedError("checkpoint truncated inside the header");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - kCrcBytes);
  auto checksum_ok = [&] {
    detail::ByteReader tail(bytes.substr(bytes.size() - kCrcBytes));
    return tail.get<std::uint32_t>() == crc32_of(body);
  };

  json header;
  std::size_t payload_bytes = 0;
  try {
    header = json::parse(in.get_bytes(static_cast<std::size_t>(header_len)));
    payload_bytes = header.at("payload_bytes").get<std::size_t>();
  } catch (const json::exception& e) {
    if (!checksum_ok()) throw ChecksumError("checkpoint checksum mismatch");
    throw FormatError(std::string("checkpoint header unreadable: ") + e.what());
  }
  const std::size_t expected = kPreambleBytes + header_len + payload_bytes + kCrcBytes;
  if (bytes.size() < expected) {
    throw TruncatedError("checkpoint truncated: " + std::to_string(bytes.size()) + " of " +
                         std::to_string(expected) + " bytes");
  }
  if (bytes.size() > expected) {
    throw FormatError("checkpoint has " + std::to_string(bytes.size() - expected) +
                      " unexpected trailing bytes");
  }
  if (!checksum_ok()) throw ChecksumError("checkpoint checksum mismatch");

  Checkpoint ckpt;
  try {
    ckpt.model = Model::zeros(model_config_from(header.at("model_config")));
    ckpt.train_config = train_config_from(header.at("train_config"));
    ckpt.vocab = Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header invalid: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint header invalid: ") + e.what());
  } catch (const DataError& e) {
    throw FormatError(std::string("checkpoint header invalid: ") + e.what());
  }
  if (ckpt.vocab.size() != ckpt.model.config.vocab_size) {
    throw FormatError("checkpoint vocabulary does not match model_config.vocab_size");
  }

  const json& manifest = header.at("tensors");
  std::size_t index = 0;
  ckpt.model.params.visit([&](const std::string& name, auto& t) {
    if (index >= manifest.size()) throw FormatError("checkpoint manifest is missing " + name);
    const json& entry = manifest[index++];
    if (entry.at("name").get<std::string>() != name ||
        entry.at("shape").get<std::vector<std::size_t>>() != shape_of(t)) {
      throw FormatError("checkpoint tensor " + entry.dump() + " does not match expected " +
                        name);
    }
    for (double& v : t.values()) v = in.get<double>();
  });
  if (index != manifest.size()) throw FormatError("checkpoint manifest has extra tensors");
  if (!in.ok() || in.remaining() != kCrcBytes) {
    throw FormatError("checkpoint payload size disagrees with its manifest");
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  detail::write_file_bytes(tmp, bytes);
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw CheckpointError("checkpoint not found: " + path.string());
  }
  return parse_checkpoint(detail::read_file_bytes(path));
}

}  // namespace revgen
