// SPDX-License-Identifier: Apache-2.0
#include "dvae/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dvae/errors.hpp"

namespace dvae::model {

std::string_view to_string(StepMode mode) noexcept {
  return mode == StepMode::brownian ? "brownian" : "verbatim";
}

StepMode step_mode_from_string(std::string_view name) {
  if (name == "brownian") return StepMode::brownian;
  if (name == "verbatim") return StepMode::verbatim;
  throw std::invalid_argument("unknown step_mode '" + std::string(name) +
                              "' (expected brownian or verbatim)");
}

double step_scale(double t, std::size_t walk_length, StepMode mode) {
  if (mode == StepMode::verbatim) return t;
  return std::sqrt(t / static_cast<double>(walk_length));
}

PosteriorParams::PosteriorParams(UnitVector mu_, double t_) : mu(std::move(mu_)), t(t_) {
  if (!std::isfinite(t) || t < kTimeFloor) {
    throw std::invalid_argument("diffusion time " + std::to_string(t) + " below floor " +
                                std::to_string(kTimeFloor));
  }
}

WalkTrace replay_walk(const PosteriorParams& params, std::vector<std::vector<double>> eps,
                      StepMode mode) {
  if (eps.empty()) throw std::invalid_argument("walk length must be at least 1");
  const std::size_t dim = params.mu.ambient_dim();
  const double scale = step_scale(params.t, eps.size(), mode);
  WalkTrace trace;
  trace.states.reserve(eps.size() + 1);
  trace.states.push_back(params.mu);
  std::vector<double> next(dim);
  for (const auto& e : eps) {
    if (e.size() != dim) {
      throw ShapeMismatch("walk noise has length " + std::to_string(e.size()) + ", expected " +
                          std::to_string(dim));
    }
    const UnitVector& z = trace.states.back();
    for (std::size_t i = 0; i < dim; ++i) next[i] = z[i] + e[i] * scale;
    trace.states.push_back(geometry::project(next));
  }
  trace.eps = std::move(eps);
  return trace;
}

WalkTrace sample_posterior(const PosteriorParams& params, std::size_t walk_length,
                           StepMode mode, Rng& rng) {
  if (walk_length == 0) throw std::invalid_argument("walk length must be at least 1");
  std::vector<std::vector<double>> eps(walk_length,
                                       std::vector<double>(params.mu.ambient_dim()));
  for (auto& e : eps) {
    for (double& v : e) v = rng.normal();
  }
  return replay_walk(params, std::move(eps), mode);
}

double kl_divergence(double t, std::size_t sphere_dim) {
  const double d = static_cast<double>(sphere_dim);
  return -0.5 * d * std::log(2.0 * std::numbers::pi * t) - 0.5 * d +
         geometry::log_sphere_volume(sphere_dim) + 0.25 * d * (d - 1.0) * t;
}

double kl_divergence_dt(double t, std::size_t sphere_dim) {
  const double d = static_cast<double>(sphere_dim);
  return -d / (2.0 * t) + 0.25 * d * (d - 1.0);
}

double reconstruction_loglik(std::span<const double> x, std::span<const double> mu_x) {
  if (x.size() != mu_x.size()) {
    throw ShapeMismatch("observation length " + std::to_string(x.size()) +
                        " does not match decoder output length " + std::to_string(mu_x.size()));
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - mu_x[i];
    sq += r * r;
  }
  return -0.5 * sq - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
}

ElboBreakdown make_breakdown(double reconstruction_loglik, double kl, double capacity,
                             double beta) {
  return ElboBreakdown{reconstruction_loglik, kl, capacity, beta,
                       reconstruction_loglik - beta * std::abs(kl - capacity)};
}

ElboBreakdown elbo(std::span<const double> x, const PosteriorParams& params,
                   const DecoderFn& decoder, double beta, double capacity,
                   std::size_t walk_length, StepMode mode, Rng& rng) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(capacity >= 0.0)) throw std::invalid_argument("capacity must be non-negative");
  const WalkTrace walk = sample_posterior(params, walk_length, mode, rng);
  const std::vector<double> mu_x = decoder(walk.sample());
  return make_breakdown(reconstruction_loglik(x, mu_x),
                        kl_divergence(params.t, params.mu.sphere_dim()), capacity, beta);
}

}  // namespace dvae::model
