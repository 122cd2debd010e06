#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scalant/model/parameters.hpp"

namespace scalant {

// Binary checkpoint layout, all integers little-endian:
//
//   magic    8 bytes  "SCALANT1"
//   version  u32      currently 1
//   config   u32 n, then n x (string key, string value)
//   metadata u32 n, then n x (string key, string value)
//   tensors  u32 n, then n x (string name, u32 rank, rank x u64 dim,
//                              product(dims) x f64 raw bits)
//
// A string is a u32 byte length followed by the bytes.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ParameterStore store;
  std::map<std::string, std::string> metadata;
};

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const std::map<std::string, std::string>& metadata = {});

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Elementwise mean of checkpoints that share one configuration.
ParameterStore average_checkpoints(const std::vector<std::filesystem::path>& paths);
ParameterStore average_stores(const std::vector<const ParameterStore*>& stores);

}  // namespace scalant
