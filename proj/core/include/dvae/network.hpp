// SPDX-License-Identifier: Apache-2.0
#pragma once

// Encoder/decoder networks and the differentiable per-sample objective.
//
// Encoder: x -> tanh MLP trunk -> { linear (no bias) + offset e_d * 0.1 -> P  => mu
//                                 { affine -> softplus + kTimeFloor         => t
// Decoder: z -> tanh MLP -> affine => mu_x

#include <cstddef>
#include <span>
#include <vector>

#include "dvae/autodiff/graph.hpp"
#include "dvae/autodiff/tensor.hpp"
#include "dvae/model.hpp"
#include "dvae/rng.hpp"

namespace dvae::model {

using autodiff::Graph;
using autodiff::NodeId;
using autodiff::ParameterSet;

/// Constant added to the last pre-projection coordinate of the encoder mean.
inline constexpr double kEncoderOffset = 0.1;

struct NetworkShape {
  std::size_t input_dim = 0;
  std::size_t sphere_dim = 10;
  std::vector<std::size_t> encoder_hidden{64, 64};
  std::vector<std::size_t> decoder_hidden{64, 64};

  std::size_t latent_dim() const noexcept { return sphere_dim + 1; }
};

/// Glorot-uniform weights and zero biases, drawn in a fixed order from `rng`.
ParameterSet init_parameters(const NetworkShape& shape, Rng& rng);

struct EncoderNodes {
  NodeId mu;
  NodeId t;
};

EncoderNodes build_encoder(Graph& graph, NodeId x, const NetworkShape& shape,
                           const ParameterSet& params);
NodeId build_decoder(Graph& graph, NodeId z, const NetworkShape& shape,
                     const ParameterSet& params);

/// x -> (mu, t). Holds its own graph; not thread-safe, cheap to copy.
class Encoder {
 public:
  Encoder(const NetworkShape& shape, const ParameterSet& params);
  PosteriorParams operator()(std::span<const double> x);

 private:
  Graph graph_;
  NodeId x_;
  EncoderNodes nodes_;
};

/// z -> mu_x.
class Decoder {
 public:
  Decoder(const NetworkShape& shape, const ParameterSet& params);
  std::vector<double> operator()(const UnitVector& z);

 private:
  Graph graph_;
  NodeId z_;
  NodeId out_;
};

struct ObjectiveSettings {
  double beta = 1.0;
  std::size_t walk_length = 5;
  StepMode step_mode = StepMode::brownian;
};

/// Full per-sample objective as one graph: encoder, L-step walk driven by
/// replayed noise, decoder, likelihood, analytic KL and the capacity penalty.
/// Gradients flow into t through both the walk scale and the KL term.
class ObjectiveGraph {
 public:
  ObjectiveGraph(const NetworkShape& shape, const ParameterSet& params,
                 ObjectiveSettings settings);

  void load_parameters(const ParameterSet& params) { graph_.load_parameters(params); }

  /// `eps` holds walk_length * (d+1) standard-normal values, step-major.
  ElboBreakdown evaluate(std::span<const double> x, std::span<const double> eps,
                         double capacity);

  /// d(objective)/d(parameters) for the last evaluate call.
  void backward();

  /// into[i] += factor * gradient of parameter i, matching `into`'s order.
  void accumulate_gradients(ParameterSet& into, double factor) const;

  const NetworkShape& shape() const noexcept { return shape_; }
  const ObjectiveSettings& settings() const noexcept { return settings_; }
  std::size_t noise_size() const noexcept { return settings_.walk_length * shape_.latent_dim(); }

  const Graph& graph() const noexcept { return graph_; }
  NodeId mu_node() const noexcept { return encoder_.mu; }
  NodeId t_node() const noexcept { return encoder_.t; }
  NodeId sample_node() const noexcept { return sample_; }

 private:
  NetworkShape shape_;
  ObjectiveSettings settings_;
  Graph graph_;
  NodeId x_;
  NodeId capacity_;
  std::vector<NodeId> eps_;
  EncoderNodes encoder_;
  NodeId sample_;
  NodeId recon_;
  NodeId kl_;
  NodeId objective_;
  std::vector<std::size_t> param_order_;  // graph parameter index -> set index
};

}  // namespace dvae::model
