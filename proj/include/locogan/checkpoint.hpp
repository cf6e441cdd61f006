#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "locogan/training.hpp"

namespace locogan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<float> data;
};

/// Versioned container: magic, version, text metadata, named float32 arrays.
///
/// Layout (little-endian):
///   "LOCOGAN\0" | u32 version | u64 metadata bytes | metadata (key=value lines)
///   | u32 array count | per array: u32 name bytes, name, u32 rank, u64 dims[rank], f32 payload
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::vector<NamedArray> arrays;

  const NamedArray& array(const std::string& name) const;
  const std::string& meta(const std::string& key) const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string serialize_network(const NetworkConfig& cfg);
NetworkConfig parse_network(const std::string& text);

/// Adds `prefix` + tensor names of `w` as arrays.
void append_weights(Checkpoint& ckpt, const std::string& prefix, const Weights<float>& w);
/// Fills every tensor of `w` (shapes taken from its config) from the arrays.
void read_weights(const Checkpoint& ckpt, const std::string& prefix, Weights<float>& w);

Checkpoint make_checkpoint(const TrainState& state, const TrainConfig& cfg);
/// Restores the state and the training configuration it was saved with.
TrainState restore_train_state(const Checkpoint& ckpt, TrainConfig& cfg);

}  // namespace locogan
