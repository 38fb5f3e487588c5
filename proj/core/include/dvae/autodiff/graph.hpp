// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dvae/autodiff/tensor.hpp"

namespace dvae::autodiff {

/// Handle to a node inside one Graph.
struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class NodeKind {
  input,
  parameter,
  constant,
  affine,          // W x + b, bias optional
  tanh,
  relu,
  softplus,
  add,             // elementwise; a size-1 operand broadcasts
  sub,
  mul,
  scale,           // x * constant
  sum,
  squared_norm,
  sphere_project,  // x / |x|
  log,
  abs,             // subgradient 0 at exactly 0
  sqrt,
};

std::string_view to_string(NodeKind kind) noexcept;

/// Static reverse-mode computation graph.
///
/// Nodes are appended in construction order, so every node's inputs precede
/// it and the node list is already a topological order. Shapes are inferred
/// and checked when a node is added; `forward` re-checks bound inputs.
class Graph {
 public:
  using Bindings = std::map<std::string, Tensor, std::less<>>;

  NodeId input(std::string name, Shape shape);
  NodeId parameter(std::string name, Tensor value);
  NodeId constant(Tensor value);

  NodeId affine(NodeId weight, NodeId x, std::optional<NodeId> bias = std::nullopt);
  NodeId tanh(NodeId x);
  NodeId relu(NodeId x);
  NodeId softplus(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId x, double factor);
  NodeId sum(NodeId x);
  NodeId squared_norm(NodeId x);
  NodeId sphere_project(NodeId x);
  NodeId log(NodeId x);
  NodeId abs(NodeId x);
  NodeId sqrt(NodeId x);

  /// Names a node so `forward` reports its value.
  void mark_output(std::string name, NodeId node);

  /// Binds named inputs, evaluates every node and returns the named outputs.
  /// Throws std::out_of_range for an unbound input, ShapeMismatch for a bad
  /// shape and NonFiniteValue when any node produces NaN or Inf.
  Bindings forward(const Bindings& inputs);

  /// Allocation-free variant of forward: inputs are set with set_input.
  void set_input(NodeId node, std::span<const double> values);
  void evaluate();

  /// Accumulates d(<seed, output>)/d(node) into every node's gradient.
  /// Gradients are reset first, so each call reports exactly one derivative.
  void backward(NodeId output, const Tensor& seed);
  /// Shorthand for a scalar output with seed 1.
  void backward(NodeId output);

  const Tensor& value(NodeId node) const { return nodes_.at(node.index).value; }
  const Tensor& gradient(NodeId node) const { return nodes_.at(node.index).grad; }
  NodeKind kind(NodeId node) const { return nodes_.at(node.index).kind; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  NodeId find_input(std::string_view name) const;
  NodeId find_parameter(std::string_view name) const;
  const std::vector<NodeId>& parameters() const noexcept { return parameters_; }
  const std::string& parameter_name(NodeId node) const { return nodes_.at(node.index).name; }

  /// Overwrites parameter values from `params` by name. Every parameter node
  /// must have a same-shaped entry; extra entries in `params` are ignored.
  void load_parameters(const ParameterSet& params);
  void set_parameter(NodeId node, const Tensor& value);

 private:
  struct Node {
    NodeKind kind;
    std::vector<NodeId> inputs;
    double factor = 0.0;  // scale factor, or |x| cache for sphere_project
    std::string name;
    Tensor value;
    Tensor grad;
  };

  NodeId push(NodeKind kind, std::vector<NodeId> inputs, Shape shape);
  NodeId elementwise(NodeKind kind, NodeId x);
  NodeId binary(NodeKind kind, NodeId a, NodeId b);
  const Node& node(NodeId id) const;
  void evaluate_node(Node& n);
  void backprop_node(const Node& n);

  std::vector<Node> nodes_;
  std::vector<NodeId> inputs_;
  std::vector<NodeId> parameters_;
  std::vector<std::pair<std::string, NodeId>> outputs_;
};

}  // namespace dvae::autodiff
