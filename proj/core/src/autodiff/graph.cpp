// SPDX-License-Identifier: Apache-2.0
#include "dvae/autodiff/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dvae/errors.hpp"
#include "dvae/geometry.hpp"

namespace dvae::autodiff {

std::string_view to_string(NodeKind kind) noexcept {
  switch (kind) {
    case NodeKind::input: return "input";
    case NodeKind::parameter: return "parameter";
    case NodeKind::constant: return "constant";
    case NodeKind::affine: return "affine";
    case NodeKind::tanh: return "tanh";
    case NodeKind::relu: return "relu";
    case NodeKind::softplus: return "softplus";
    case NodeKind::add: return "add";
    case NodeKind::sub: return "sub";
    case NodeKind::mul: return "mul";
    case NodeKind::scale: return "scale";
    case NodeKind::sum: return "sum";
    case NodeKind::squared_norm: return "squared_norm";
    case NodeKind::sphere_project: return "sphere_project";
    case NodeKind::log: return "log";
    case NodeKind::abs: return "abs";
    case NodeKind::sqrt: return "sqrt";
  }
  return "unknown";
}

namespace {

double softplus_value(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Index into an operand that may be a broadcast scalar.
inline double at(const Tensor& t, std::size_t i) noexcept {
  return t.size() == 1 ? t[0] : t[i];
}

inline void accumulate(Tensor& grad, std::size_t i, double g) noexcept {
  if (grad.size() == 1) {
    grad[0] += g;
  } else {
    grad[i] += g;
  }
}

}  // namespace

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw std::out_of_range("node id " + std::to_string(id.index) + " out of range");
  }
  return nodes_[id.index];
}

NodeId Graph::push(NodeKind kind, std::vector<NodeId> inputs, Shape shape) {
  Node n{kind, std::move(inputs), 0.0, {}, Tensor(shape), Tensor(shape)};
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

NodeId Graph::input(std::string name, Shape shape) {
  const NodeId id = push(NodeKind::input, {}, std::move(shape));
  nodes_[id.index].name = std::move(name);
  inputs_.push_back(id);
  return id;
}

NodeId Graph::parameter(std::string name, Tensor value) {
  for (NodeId p : parameters_) {
    if (nodes_[p.index].name == name) {
      throw std::invalid_argument("duplicate parameter node: " + name);
    }
  }
  const NodeId id = push(NodeKind::parameter, {}, value.shape());
  nodes_[id.index].name = std::move(name);
  nodes_[id.index].value = std::move(value);
  parameters_.push_back(id);
  return id;
}

NodeId Graph::constant(Tensor value) {
  const NodeId id = push(NodeKind::constant, {}, value.shape());
  nodes_[id.index].value = std::move(value);
  return id;
}

NodeId Graph::affine(NodeId weight, NodeId x, std::optional<NodeId> bias) {
  const Shape& ws = node(weight).value.shape();
  const Shape& xs = node(x).value.shape();
  if (ws.size() != 2 || xs.size() != 1 || ws[1] != xs[0]) {
    throw ShapeMismatch("affine: weight " + shape_string(ws) + " incompatible with input " +
                        shape_string(xs));
  }
  std::vector<NodeId> in{weight, x};
  if (bias) {
    const Shape& bs = node(*bias).value.shape();
    if (bs != Shape{ws[0]}) {
      throw ShapeMismatch("affine: bias " + shape_string(bs) + " expected [" +
                          std::to_string(ws[0]) + "]");
    }
    in.push_back(*bias);
  }
  return push(NodeKind::affine, std::move(in), Shape{ws[0]});
}

NodeId Graph::elementwise(NodeKind kind, NodeId x) {
  return push(kind, {x}, node(x).value.shape());
}

NodeId Graph::tanh(NodeId x) { return elementwise(NodeKind::tanh, x); }
NodeId Graph::relu(NodeId x) { return elementwise(NodeKind::relu, x); }
NodeId Graph::softplus(NodeId x) { return elementwise(NodeKind::softplus, x); }
NodeId Graph::log(NodeId x) { return elementwise(NodeKind::log, x); }
NodeId Graph::abs(NodeId x) { return elementwise(NodeKind::abs, x); }
NodeId Graph::sqrt(NodeId x) { return elementwise(NodeKind::sqrt, x); }

NodeId Graph::scale(NodeId x, double factor) {
  const NodeId id = elementwise(NodeKind::scale, x);
  nodes_[id.index].factor = factor;
  return id;
}

NodeId Graph::binary(NodeKind kind, NodeId a, NodeId b) {
  const Shape& as = node(a).value.shape();
  const Shape& bs = node(b).value.shape();
  Shape out;
  if (as == bs || shape_size(bs) == 1) {
    out = as;
  } else if (shape_size(as) == 1) {
    out = bs;
  } else {
    throw ShapeMismatch(std::string(to_string(kind)) + ": shapes " + shape_string(as) +
                        " and " + shape_string(bs) + " do not match");
  }
  return push(kind, {a, b}, std::move(out));
}

NodeId Graph::add(NodeId a, NodeId b) { return binary(NodeKind::add, a, b); }
NodeId Graph::sub(NodeId a, NodeId b) { return binary(NodeKind::sub, a, b); }
NodeId Graph::mul(NodeId a, NodeId b) { return binary(NodeKind::mul, a, b); }

NodeId Graph::sum(NodeId x) {
  node(x);
  return push(NodeKind::sum, {x}, Shape{1});
}

NodeId Graph::squared_norm(NodeId x) {
  node(x);
  return push(NodeKind::squared_norm, {x}, Shape{1});
}

NodeId Graph::sphere_project(NodeId x) {
  const Shape& xs = node(x).value.shape();
  if (xs.size() != 1 || xs[0] < 2) {
    throw ShapeMismatch("sphere_project needs a vector of length >= 2, got " + shape_string(xs));
  }
  return push(NodeKind::sphere_project, {x}, xs);
}

void Graph::mark_output(std::string name, NodeId id) {
  node(id);
  outputs_.emplace_back(std::move(name), id);
}

NodeId Graph::find_input(std::string_view name) const {
  for (NodeId id : inputs_) {
    if (nodes_[id.index].name == name) return id;
  }
  throw std::out_of_range("no input named " + std::string(name));
}

NodeId Graph::find_parameter(std::string_view name) const {
  for (NodeId id : parameters_) {
    if (nodes_[id.index].name == name) return id;
  }
  throw std::out_of_range("no parameter named " + std::string(name));
}

void Graph::set_input(NodeId id, std::span<const double> values) {
  Node& n = nodes_.at(id.index);
  if (n.kind != NodeKind::input) throw std::invalid_argument("node is not an input");
  if (values.size() != n.value.size()) {
    throw ShapeMismatch("input '" + n.name + "' expects " + std::to_string(n.value.size()) +
                        " values, got " + std::to_string(values.size()));
  }
  std::copy(values.begin(), values.end(), n.value.data().begin());
}

void Graph::set_parameter(NodeId id, const Tensor& value) {
  Node& n = nodes_.at(id.index);
  if (n.kind != NodeKind::parameter) throw std::invalid_argument("node is not a parameter");
  if (value.shape() != n.value.shape()) {
    throw ShapeMismatch("parameter '" + n.name + "' has shape " + shape_string(n.value.shape()) +
                        ", got " + shape_string(value.shape()));
  }
  std::copy(value.data().begin(), value.data().end(), n.value.data().begin());
}

void Graph::load_parameters(const ParameterSet& params) {
  for (NodeId id : parameters_) set_parameter(id, params.at(nodes_[id.index].name));
}

Graph::Bindings Graph::forward(const Bindings& inputs) {
  for (NodeId id : inputs_) {
    const std::string& name = nodes_[id.index].name;
    const auto it = inputs.find(name);
    if (it == inputs.end()) throw std::out_of_range("input '" + name + "' is not bound");
    if (it->second.shape() != nodes_[id.index].value.shape()) {
      throw ShapeMismatch("input '" + name + "' expects shape " +
                          shape_string(nodes_[id.index].value.shape()) + ", got " +
                          shape_string(it->second.shape()));
    }
    set_input(id, it->second.data());
  }
  evaluate();
  Bindings out;
  for (const auto& [name, id] : outputs_) out.insert_or_assign(name, nodes_[id.index].value);
  return out;
}

void Graph::evaluate() {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    evaluate_node(n);
    if (!n.value.all_finite()) {
      throw NonFiniteValue("non-finite value in " + std::string(to_string(n.kind)) +
                           " node " + std::to_string(i));
    }
  }
}

void Graph::evaluate_node(Node& n) {
  auto& y = n.value;
  const auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k].index].value; };
  switch (n.kind) {
    case NodeKind::input:
    case NodeKind::parameter:
    case NodeKind::constant:
      return;
    case NodeKind::affine: {
      const Tensor& w = in(0);
      const Tensor& x = in(1);
      const std::size_t rows = w.shape()[0];
      const std::size_t cols = w.shape()[1];
      for (std::size_t r = 0; r < rows; ++r) {
        double s = n.inputs.size() > 2 ? in(2)[r] : 0.0;
        const double* wr = w.data().data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) s += wr[c] * x[c];
        y[r] = s;
      }
      return;
    }
    case NodeKind::tanh:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(in(0)[i]);
      return;
    case NodeKind::relu:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::max(0.0, in(0)[i]);
      return;
    case NodeKind::softplus:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = softplus_value(in(0)[i]);
      return;
    case NodeKind::log:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::log(in(0)[i]);
      return;
    case NodeKind::abs:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::abs(in(0)[i]);
      return;
    case NodeKind::sqrt:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sqrt(in(0)[i]);
      return;
    case NodeKind::scale:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = in(0)[i] * n.factor;
      return;
    case NodeKind::add:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = at(in(0), i) + at(in(1), i);
      return;
    case NodeKind::sub:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = at(in(0), i) - at(in(1), i);
      return;
    case NodeKind::mul:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = at(in(0), i) * at(in(1), i);
      return;
    case NodeKind::sum: {
      double s = 0.0;
      for (double v : in(0).data()) s += v;
      y[0] = s;
      return;
    }
    case NodeKind::squared_norm: {
      double s = 0.0;
      for (double v : in(0).data()) s += v * v;
      y[0] = s;
      return;
    }
    case NodeKind::sphere_project: {
      const geometry::UnitVector u = geometry::project(in(0).data());
      n.factor = geometry::norm(in(0).data());
      std::copy(u.coords().begin(), u.coords().end(), y.data().begin());
      return;
    }
  }
}

void Graph::backward(NodeId output) { backward(output, Tensor::scalar(1.0)); }

void Graph::backward(NodeId output, const Tensor& seed) {
  const Node& out = node(output);
  if (seed.shape() != out.value.shape()) {
    throw ShapeMismatch("seed gradient shape " + shape_string(seed.shape()) +
                        " does not match output " + shape_string(out.value.shape()));
  }
  for (Node& n : nodes_) n.grad.fill(0.0);
  nodes_[output.index].grad = seed;
  for (std::size_t i = output.index + 1; i-- > 0;) backprop_node(nodes_[i]);
  for (NodeId p : parameters_) {
    if (!nodes_[p.index].grad.all_finite()) {
      throw NonFiniteValue("non-finite gradient for parameter '" + nodes_[p.index].name + "'");
    }
  }
}

void Graph::backprop_node(const Node& n) {
  const Tensor& g = n.grad;
  const Tensor& y = n.value;
  const auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k].index].value; };
  const auto gin = [&](std::size_t k) -> Tensor& { return nodes_[n.inputs[k].index].grad; };
  switch (n.kind) {
    case NodeKind::input:
    case NodeKind::parameter:
    case NodeKind::constant:
      return;
    case NodeKind::affine: {
      const Tensor& w = in(0);
      const Tensor& x = in(1);
      Tensor& gw = gin(0);
      Tensor& gx = gin(1);
      const std::size_t rows = w.shape()[0];
      const std::size_t cols = w.shape()[1];
      for (std::size_t r = 0; r < rows; ++r) {
        const double gr = g[r];
        if (gr == 0.0) continue;
        const double* wr = w.data().data() + r * cols;
        double* gwr = gw.data().data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
          gwr[c] += gr * x[c];
          gx[c] += gr * wr[c];
        }
      }
      if (n.inputs.size() > 2) {
        Tensor& gb = gin(2);
        for (std::size_t r = 0; r < rows; ++r) gb[r] += g[r];
      }
      return;
    }
    case NodeKind::tanh:
      for (std::size_t i = 0; i < y.size(); ++i) gin(0)[i] += g[i] * (1.0 - y[i] * y[i]);
      return;
    case NodeKind::relu:
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (in(0)[i] > 0.0) gin(0)[i] += g[i];
      }
      return;
    case NodeKind::softplus:
      for (std::size_t i = 0; i < y.size(); ++i) gin(0)[i] += g[i] * sigmoid(in(0)[i]);
      return;
    case NodeKind::log:
      for (std::size_t i = 0; i < y.size(); ++i) gin(0)[i] += g[i] / in(0)[i];
      return;
    case NodeKind::abs:
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = in(0)[i];
        if (x > 0.0) {
          gin(0)[i] += g[i];
        } else if (x < 0.0) {
          gin(0)[i] -= g[i];
        }
      }
      return;
    case NodeKind::sqrt:
      for (std::size_t i = 0; i < y.size(); ++i) gin(0)[i] += g[i] / (2.0 * y[i]);
      return;
    case NodeKind::scale:
      for (std::size_t i = 0; i < y.size(); ++i) gin(0)[i] += g[i] * n.factor;
      return;
    case NodeKind::add:
      for (std::size_t i = 0; i < y.size(); ++i) {
        accumulate(gin(0), i, g[i]);
        accumulate(gin(1), i, g[i]);
      }
      return;
    case NodeKind::sub:
      for (std::size_t i = 0; i < y.size(); ++i) {
        accumulate(gin(0), i, g[i]);
        accumulate(gin(1), i, -g[i]);
      }
      return;
    case NodeKind::mul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      for (std::size_t i = 0; i < y.size(); ++i) {
        accumulate(gin(0), i, g[i] * at(b, i));
        accumulate(gin(1), i, g[i] * at(a, i));
      }
      return;
    }
    case NodeKind::sum:
      for (double& v : gin(0).data()) v += g[0];
      return;
    case NodeKind::squared_norm: {
      const Tensor& x = in(0);
      Tensor& gx = gin(0);
      for (std::size_t i = 0; i < x.size(); ++i) gx[i] += 2.0 * x[i] * g[0];
      return;
    }
    case NodeKind::sphere_project:
      geometry::project_vjp(y.data(), n.factor, g.data(), gin(0).data());
      return;
  }
}

}  // namespace dvae::autodiff
