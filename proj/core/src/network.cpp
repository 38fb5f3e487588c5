// SPDX-License-Identifier: Apache-2.0
#include "dvae/network.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dvae/autodiff/layers.hpp"
#include "dvae/errors.hpp"
#include "dvae/geometry.hpp"

namespace dvae::model {

using autodiff::Activation;
using autodiff::Tensor;

namespace {

std::size_t last_width(const std::vector<std::size_t>& widths, std::size_t fallback) {
  return widths.empty() ? fallback : widths.back();
}

}  // namespace

ParameterSet init_parameters(const NetworkShape& shape, Rng& rng) {
  if (shape.input_dim == 0) throw std::invalid_argument("input_dim must be positive");
  if (shape.sphere_dim == 0) throw std::invalid_argument("sphere_dim must be positive");
  ParameterSet p;
  autodiff::init_mlp(p, "enc", shape.input_dim, shape.encoder_hidden, rng);
  const std::size_t trunk = last_width(shape.encoder_hidden, shape.input_dim);
  autodiff::init_dense(p, "enc.mu", trunk, shape.latent_dim(), false, rng);
  autodiff::init_dense(p, "enc.t", trunk, 1, true, rng);
  autodiff::init_mlp(p, "dec", shape.latent_dim(), shape.decoder_hidden, rng);
  autodiff::init_dense(p, "dec.out", last_width(shape.decoder_hidden, shape.latent_dim()),
                       shape.input_dim, true, rng);
  return p;
}

EncoderNodes build_encoder(Graph& g, NodeId x, const NetworkShape& shape,
                           const ParameterSet& params) {
  const NodeId h = autodiff::mlp(g, x, "enc", shape.encoder_hidden.size(), params,
                                 Activation::tanh);
  Tensor offset({shape.latent_dim()});
  offset[shape.latent_dim() - 1] = kEncoderOffset;
  const NodeId raw_mu = g.add(autodiff::dense(g, h, "enc.mu", params), g.constant(offset));
  const NodeId mu = g.sphere_project(raw_mu);
  const NodeId t = g.add(autodiff::dense(g, h, "enc.t", params, Activation::softplus),
                         g.constant(Tensor::scalar(kTimeFloor)));
  return {mu, t};
}

NodeId build_decoder(Graph& g, NodeId z, const NetworkShape& shape, const ParameterSet& params) {
  const NodeId h = autodiff::mlp(g, z, "dec", shape.decoder_hidden.size(), params,
                                 Activation::tanh);
  return autodiff::dense(g, h, "dec.out", params);
}

Encoder::Encoder(const NetworkShape& shape, const ParameterSet& params) {
  x_ = graph_.input("x", {shape.input_dim});
  nodes_ = build_encoder(graph_, x_, shape, params);
}

PosteriorParams Encoder::operator()(std::span<const double> x) {
  graph_.set_input(x_, x);
  graph_.evaluate();
  const auto mu = graph_.value(nodes_.mu).data();
  return PosteriorParams(geometry::project(mu), graph_.value(nodes_.t)[0]);
}

Decoder::Decoder(const NetworkShape& shape, const ParameterSet& params) {
  z_ = graph_.input("z", {shape.latent_dim()});
  out_ = build_decoder(graph_, z_, shape, params);
}

std::vector<double> Decoder::operator()(const UnitVector& z) {
  graph_.set_input(z_, z.coords());
  graph_.evaluate();
  return graph_.value(out_).values();
}

ObjectiveGraph::ObjectiveGraph(const NetworkShape& shape, const ParameterSet& params,
                               ObjectiveSettings settings)
    : shape_(shape), settings_(settings) {
  if (settings_.walk_length == 0) throw std::invalid_argument("walk length must be at least 1");
  if (!(settings_.beta > 0.0)) throw std::invalid_argument("beta must be positive");
  Graph& g = graph_;
  x_ = g.input("x", {shape.input_dim});
  capacity_ = g.input("capacity", {1});
  encoder_ = build_encoder(g, x_, shape, params);

  const NodeId step =
      settings_.step_mode == StepMode::brownian
          ? g.sqrt(g.scale(encoder_.t, 1.0 / static_cast<double>(settings_.walk_length)))
          : encoder_.t;
  NodeId z = encoder_.mu;
  for (std::size_t l = 0; l < settings_.walk_length; ++l) {
    const NodeId e = g.input("eps." + std::to_string(l), {shape.latent_dim()});
    eps_.push_back(e);
    z = g.sphere_project(g.add(z, g.mul(e, step)));
  }
  sample_ = z;

  const double n = static_cast<double>(shape.input_dim);
  const NodeId mu_x = build_decoder(g, z, shape, params);
  recon_ = g.add(g.scale(g.squared_norm(g.sub(x_, mu_x)), -0.5),
                 g.constant(Tensor::scalar(-0.5 * n * std::log(2.0 * std::numbers::pi))));

  const double d = static_cast<double>(shape.sphere_dim);
  const double kl_const = -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * d +
                          geometry::log_sphere_volume(shape.sphere_dim);
  kl_ = g.add(g.add(g.scale(g.log(encoder_.t), -0.5 * d),
                    g.scale(encoder_.t, 0.25 * d * (d - 1.0))),
              g.constant(Tensor::scalar(kl_const)));

  const NodeId penalty = g.abs(g.sub(kl_, capacity_));
  objective_ = g.add(recon_, g.scale(penalty, -settings_.beta));

  for (NodeId p : g.parameters()) param_order_.push_back(params.index_of(g.parameter_name(p)));
}

ElboBreakdown ObjectiveGraph::evaluate(std::span<const double> x, std::span<const double> eps,
                                       double capacity) {
  if (eps.size() != noise_size()) {
    throw ShapeMismatch("walk noise has " + std::to_string(eps.size()) + " values, expected " +
                        std::to_string(noise_size()));
  }
  graph_.set_input(x_, x);
  const double c[1] = {capacity};
  graph_.set_input(capacity_, c);
  const std::size_t k = shape_.latent_dim();
  for (std::size_t l = 0; l < eps_.size(); ++l) graph_.set_input(eps_[l], eps.subspan(l * k, k));
  graph_.evaluate();
  return ElboBreakdown{graph_.value(recon_)[0], graph_.value(kl_)[0], capacity, settings_.beta,
                       graph_.value(objective_)[0]};
}

void ObjectiveGraph::backward() { graph_.backward(objective_); }

void ObjectiveGraph::accumulate_gradients(ParameterSet& into, double factor) const {
  const auto& params = graph_.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& g = graph_.gradient(params[i]);
    Tensor& dst = into[param_order_[i]];
    if (dst.size() != g.size()) throw ShapeMismatch("gradient buffer shape mismatch");
    for (std::size_t j = 0; j < g.size(); ++j) dst[j] += factor * g[j];
  }
}

}  // namespace dvae::model
