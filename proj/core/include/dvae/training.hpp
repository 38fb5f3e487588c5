// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "dvae/autodiff/tensor.hpp"
#include "dvae/config.hpp"
#include "dvae/data.hpp"
#include "dvae/rng.hpp"

namespace dvae::training {

using autodiff::ParameterSet;

/// Capacity target for `epoch`: linear from C_min at epoch 0 to C_max at
/// epoch anneal_epochs - 1, then held. With anneal_epochs = 1 it is C_max
/// from the start.
double capacity_schedule(std::size_t epoch, const TrainConfig& config);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One Adam descent step. `step` is the 1-based step count used for bias
/// correction. Throws ShapeMismatch when the four sets disagree.
void optimizer_step(ParameterSet& params, const ParameterSet& grads, ParameterSet& first_moment,
                    ParameterSet& second_moment, std::uint64_t step, double learning_rate,
                    const AdamHyper& hyper = {});

struct EpochReport {
  std::size_t epoch = 0;
  double objective = 0.0;
  double kl = 0.0;
  double reconstruction = 0.0;
  double capacity = 0.0;

  friend bool operator==(const EpochReport&, const EpochReport&) = default;
};

/// Everything needed to continue training bit-identically.
struct TrainState {
  std::size_t input_dim = 0;
  ParameterSet params;
  ParameterSet first_moment;
  ParameterSet second_moment;
  std::uint64_t optimizer_steps = 0;
  std::size_t epoch = 0;  // next epoch to run
  Rng shuffle_rng;
  Rng walk_rng;
  std::vector<EpochReport> history;

  friend bool operator==(const TrainState& a, const TrainState& b) {
    return a.input_dim == b.input_dim && a.params == b.params &&
           a.first_moment == b.first_moment && a.second_moment == b.second_moment &&
           a.optimizer_steps == b.optimizer_steps && a.epoch == b.epoch &&
           a.shuffle_rng.state() == b.shuffle_rng.state() &&
           a.walk_rng.state() == b.walk_rng.state() && a.history == b.history;
  }
};

/// Fresh state: parameters from the init stream of `config.seed`, zero
/// moments, shuffle and walk streams split from the same seed.
TrainState initialize_training(const TrainConfig& config, std::size_t input_dim);

struct TrainOptions {
  /// Worker threads for per-sample forward/backward within a batch.
  /// Gradients are reduced in sample order, so results do not depend on it.
  std::size_t threads = 1;
};

/// Runs one epoch: shuffle, minibatch, Adam ascent on the objective (descent
/// on its negation, gradients averaged over the batch). On NonFiniteValue
/// the exception carries epoch and batch index and `state` is left unchanged.
EpochReport train_epoch(TrainState& state, const data::LabeledDataset& data,
                        const TrainConfig& config, const TrainOptions& options = {});

using EpochCallback = std::function<void(const TrainState&, const EpochReport&)>;

/// Calls train_epoch until state.epoch == config.epochs.
void train(TrainState& state, const data::LabeledDataset& data, const TrainConfig& config,
           const TrainOptions& options = {}, const EpochCallback& on_epoch = {});

}  // namespace dvae::training
