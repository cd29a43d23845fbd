#ifndef REVGEN_CHECKPOINT_HPP_
#define REVGEN_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "revgen/model.hpp"
#include "revgen/textdata.hpp"
#include "revgen/training.hpp"

namespace revgen {

/**
 * Single-file model checkpoint:
 *
 *   "RGCK"            4 bytes
 *   format_version    u32 LE
 *   header_length     u64 LE
 *   header            UTF-8 JSON: model_config, train_config, vocab, tensors
 *                     (name + shape, in payload order), payload_bytes
 *   payload           every tensor as row-major float64 LE
 *   crc32             u32 LE, zlib CRC-32 of all preceding bytes
 */
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ChecksumError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class VersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class TruncatedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class FormatError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct Checkpoint {
  Model model;
  Vocabulary vocab;
  TrainConfig train_config;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace revgen

#endif  // REVGEN_CHECKPOINT_HPP_
