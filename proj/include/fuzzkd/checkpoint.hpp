// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fuzzkd/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fuzzkd::nn {

inline constexpr char kCheckpointMagic[4] = {'F', 'K', 'D', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  bool operator==(const NamedTensor &) const = default;
};

/// On-disk layout, all integers little-endian:
///
///   "FKDM" | u32 version | u32 tensor_count
///   tensor_count x { u32 name_len | name | u32 rank | rank x u32 dim |
///                    prod(dims) x f32 value }
///   u32 metadata_len | metadata (JSON text, holds the "network" spec)
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::vector<NamedTensor> tensors;
  std::string metadata;

  bool operator==(const Checkpoint &) const = default;
};

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::filesystem::path &path);

std::vector<unsigned char> encode_checkpoint(const Checkpoint &ckpt);
Checkpoint decode_checkpoint(const std::vector<unsigned char> &bytes);

/// Snapshot of a network's parameters at 32-bit precision. `extra` is merged
/// into the metadata object next to the network spec.
Checkpoint make_checkpoint(const Network &net,
                           const nlohmann::json &extra = nlohmann::json::object());

/// Rebuilds the network described by the metadata. Every parameter must be
/// present with the expected shape.
Network network_from_checkpoint(const Checkpoint &ckpt);

} // namespace fuzzkd::nn
