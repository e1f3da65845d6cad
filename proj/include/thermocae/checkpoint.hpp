#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "thermocae/model.hpp"

namespace thermocae {

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

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout, little-endian:
//   "CAE1" | u32 version | u32 num_layers | u32 latent_dim | u32 input_size
//   | u32 n_params | n_params x (u32 name_len | name | u32 rank | u64 dims[rank]
//   | f64 values[]) | u32 CRC-32 of every byte after the magic
std::vector<std::uint8_t> serialize_checkpoint(const CaeModel& model);
CaeModel deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const CaeModel& model, const std::filesystem::path& path);
CaeModel load_checkpoint(const std::filesystem::path& path);

}  // namespace thermocae
