// SPDX-License-Identifier: Apache-2.0
#include "dvae/autodiff/layers.hpp"

#include <cmath>

namespace dvae::autodiff {

Tensor glorot_uniform(std::size_t fan_out, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w({fan_out, fan_in});
  for (double& v : w.data()) v = limit * (2.0 * rng.uniform() - 1.0);
  return w;
}

void init_dense(ParameterSet& params, const std::string& prefix, std::size_t fan_in,
                std::size_t fan_out, bool with_bias, Rng& rng) {
  params.add(prefix + ".W", glorot_uniform(fan_out, fan_in, rng));
  if (with_bias) params.add(prefix + ".b", Tensor({fan_out}));
}

NodeId activate(Graph& graph, NodeId x, Activation activation) {
  switch (activation) {
    case Activation::none: return x;
    case Activation::tanh: return graph.tanh(x);
    case Activation::relu: return graph.relu(x);
    case Activation::softplus: return graph.softplus(x);
  }
  return x;
}

NodeId dense(Graph& graph, NodeId x, const std::string& prefix, const ParameterSet& params,
             Activation activation) {
  const NodeId w = graph.parameter(prefix + ".W", params.at(prefix + ".W"));
  std::optional<NodeId> b;
  if (params.contains(prefix + ".b")) b = graph.parameter(prefix + ".b", params.at(prefix + ".b"));
  return activate(graph, graph.affine(w, x, b), activation);
}

void init_mlp(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
              const std::vector<std::size_t>& widths, Rng& rng) {
  std::size_t fan_in = input_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    init_dense(params, prefix + "." + std::to_string(i), fan_in, widths[i], true, rng);
    fan_in = widths[i];
  }
}

NodeId mlp(Graph& graph, NodeId x, const std::string& prefix, std::size_t layers,
           const ParameterSet& params, Activation hidden_activation) {
  for (std::size_t i = 0; i < layers; ++i) {
    x = dense(graph, x, prefix + "." + std::to_string(i), params, hidden_activation);
  }
  return x;
}

}  // namespace dvae::autodiff
