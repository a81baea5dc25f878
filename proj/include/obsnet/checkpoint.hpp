#pragma once

#include <string>

#include <json.hpp>

#include "obsnet/model.hpp"

namespace obsnet {

// Single-file little-endian container:
//   magic "OBSN", version u32 = 1,
//   u32 JSON header length + JSON (config, vocab, intents, metadata),
//   tensor table: count u32, then per tensor
//   { name_len u16, name bytes, ndim u8, dims u32[], float32 data }.
// Loading reproduces forward outputs bit-exactly.
void save_checkpoint(const std::string& path, const Model& model,
                     const nlohmann::json& metadata = nlohmann::json::object());

struct LoadedCheckpoint {
  Model model;
  nlohmann::json metadata;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace obsnet
