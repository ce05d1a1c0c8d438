#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "vitreg/model.hpp"

namespace vitreg {

inline constexpr int kCheckpointFormatVersion = 1;

// Container layout:
//   8 bytes   magic "VITRGCK1"
//   u64 LE    header length in bytes
//   header    UTF-8 JSON {"format_version", "config", "tensors": [{"name","shape"}], "meta"}
//   payload   each tensor in ParameterLayout order as raw little-endian float32
void save_checkpoint(const VitWeights& weights, const std::filesystem::path& path,
                     const nlohmann::json& meta = nlohmann::json::object());

struct LoadedCheckpoint {
  VitWeights weights;
  nlohmann::json meta;
};

// Restores weights and the config stored in the header.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Like load_checkpoint but requires the stored tensors to match `config`;
// a mismatch names the first differing tensor.
VitWeights load_weights(const VitConfig& config, const std::filesystem::path& path);

}  // namespace vitreg
