#pragma once

// Checkpoint layout (all integers little-endian):
//   "MIGN" | u32 version | u32 manifest_bytes | manifest JSON | tensor data
// The manifest lists {name, shape:[rows, cols], offset} per tensor; offset is
// the byte position inside the data section. Tensor data is row-major f32.

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "longmatch/corpus.hpp"
#include "longmatch/transformer.hpp"

namespace longmatch {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelConfig config;
    ModelWeights weights;
    Vocab vocab;
    nlohmann::json pipeline = nlohmann::json::object();  // preprocessing settings
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace longmatch
