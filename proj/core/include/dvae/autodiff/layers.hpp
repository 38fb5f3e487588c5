// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dvae/autodiff/graph.hpp"
#include "dvae/autodiff/tensor.hpp"
#include "dvae/rng.hpp"

namespace dvae::autodiff {

enum class Activation { none, tanh, relu, softplus };

/// Uniform in [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))].
Tensor glorot_uniform(std::size_t fan_out, std::size_t fan_in, Rng& rng);

/// Adds "<prefix>.W" (fan_out x fan_in, Glorot) and, when `with_bias`,
/// "<prefix>.b" (zeros) to `params`.
void init_dense(ParameterSet& params, const std::string& prefix, std::size_t fan_in,
                std::size_t fan_out, bool with_bias, Rng& rng);

/// Wires a dense layer whose parameters already exist in `params`.
NodeId dense(Graph& graph, NodeId x, const std::string& prefix, const ParameterSet& params,
             Activation activation = Activation::none);

NodeId activate(Graph& graph, NodeId x, Activation activation);

/// Stack of dense layers "<prefix>.0", "<prefix>.1", ... with the given
/// widths, all using `hidden_activation`.
void init_mlp(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
              const std::vector<std::size_t>& widths, Rng& rng);
NodeId mlp(Graph& graph, NodeId x, const std::string& prefix, std::size_t layers,
           const ParameterSet& params, Activation hidden_activation);

}  // namespace dvae::autodiff
