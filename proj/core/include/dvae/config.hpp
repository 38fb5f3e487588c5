// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dvae/model.hpp"
#include "dvae/network.hpp"

namespace dvae::training {

/// Training hyperparameters. Defaults: d=10, beta=1, L=5, C from 0 to 15
/// nats annealed over all epochs, Adam with learning rate 1e-3, batch 64.
struct TrainConfig {
  std::size_t d = 10;
  double beta = 1.0;
  std::size_t walk_length = 5;
  double C_min = 0.0;
  double C_max = 15.0;
  std::size_t epochs = 300;
  std::size_t anneal_epochs = 300;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  model::StepMode step_mode = model::StepMode::brownian;
  std::vector<std::size_t> encoder_hidden{64, 64};
  std::vector<std::size_t> decoder_hidden{64, 64};
  std::size_t checkpoint_every = 50;
  std::string dataset = "ring:N=2000,n=32,noise=0.05,seed=0";

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  model::NetworkShape network_shape(std::size_t input_dim) const;
  model::ObjectiveSettings objective_settings() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Serialization. from_json rejects unknown keys and wrong types with
/// ConfigError; missing keys keep their defaults, except that anneal_epochs
/// defaults to epochs. The result is validated.
nlohmann::json to_json(const TrainConfig& config);
TrainConfig config_from_json(const nlohmann::json& j);
TrainConfig load_config(const std::filesystem::path& path);

}  // namespace dvae::training
