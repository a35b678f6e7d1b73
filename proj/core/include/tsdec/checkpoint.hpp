#pragma once

// Binary checkpoint container. Layout (all integers little-endian):
//
//   magic      8 bytes  "TSDECKPT"
//   version    u32      kCheckpointVersion
//   header     u64 length + UTF-8 JSON {"model": ModelConfig, "metadata": {...}}
//   arrays     u64 count, then per array:
//                u32 name length, name bytes,
//                u32 rank, u64 dims[rank],
//                f64 values[prod(dims)] (IEEE-754 binary64, row-major)
//
// Model weights are stored under their ModelWeights::parameters() names; any
// extra arrays (optimizer moments) carry their own prefix. Writes go to a
// temporary file that is renamed into place, so an existing checkpoint is
// never left half-written.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsdec/model.hpp"

namespace tsdec {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

struct Checkpoint {
  ModelConfig config;
  ModelWeights weights;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<NamedArray> extra;

  const NamedArray* find_extra(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tsdec
