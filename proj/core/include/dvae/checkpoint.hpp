// SPDX-License-Identifier: Apache-2.0
#pragma once

// Checkpoint directory layout:
//   manifest.json  config, epoch, optimizer step, rng states, metric history
//                  and a tensor index {name, role, shape, offset}
//   weights.bin    every tensor in manifest order as little-endian float64;
//                  offsets are in bytes from the start of the file

#include <filesystem>

#include "dvae/config.hpp"
#include "dvae/training.hpp"

namespace dvae::training {

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kWeightsFile = "weights.bin";

struct Checkpoint {
  TrainConfig config;
  TrainState state;
};

/// Creates `dir` if needed and overwrites any previous checkpoint there.
/// Throws IoError on failure.
void save_checkpoint(const std::filesystem::path& dir, const TrainConfig& config,
                     const TrainState& state);

/// Throws IoError for missing or unreadable files and ParseError for a
/// malformed manifest or truncated weights.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace dvae::training
