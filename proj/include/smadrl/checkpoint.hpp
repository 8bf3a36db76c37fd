#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "smadrl/config.hpp"
#include "smadrl/dqn.hpp"

namespace smadrl {

// Complete training state at an episode boundary.
struct Checkpoint {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  int episodes_done = 0;
  std::vector<DqnAgent> agents;
};

inline constexpr std::string_view kCheckpointMagic = "SMADRL-CKPT-v001";
inline constexpr int kCheckpointVersion = 1;

// Layout: 16-byte magic, u64 little-endian manifest length, JSON manifest
// (config, counters, rng and optimizer scalars, blob table), then the blobs
// as little-endian 32-bit floats in manifest order.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);  // throws IoError

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace smadrl
