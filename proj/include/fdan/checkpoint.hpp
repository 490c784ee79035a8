#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fdan/model.hpp"

namespace fdan {

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Shared binary container: magic "FDAN", u16 version, u32 length-prefixed
// UTF-8 JSON blob, then per tensor: u16 name length, name bytes, u8 rank,
// rank x u32 dims, raw f32 payload. All integers and floats little-endian.
inline constexpr std::uint16_t kContainerVersion = 1;

void write_container(const std::filesystem::path& path,
                     const std::string& json_text,
                     const std::vector<NamedTensor>& tensors);
std::pair<std::string, std::vector<NamedTensor>> read_container(
    const std::filesystem::path& path);

// Model checkpoints store the model config as the JSON blob and the
// parameters in registration order.
void save_checkpoint(const std::filesystem::path& path, const FdanConfig& config,
                     const ParamStore& params);

struct LoadedModel {
  FdanNetwork net;
  ParamStore params;
};

// Rebuilds the network from the embedded config and fills in the weights.
LoadedModel load_checkpoint(const std::filesystem::path& path);

// Loads weights into an existing store; the embedded config must match
// `expect` exactly (ConfigError otherwise).
void load_checkpoint_into(const std::filesystem::path& path,
                          const FdanConfig& expect, ParamStore& params);

}  // namespace fdan
