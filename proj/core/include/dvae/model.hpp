// SPDX-License-Identifier: Apache-2.0
#pragma once

// Heat-kernel posterior on S^d, its closed-form KL to the uniform prior, the
// identity-covariance Gaussian likelihood and the capacity-annealed objective.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dvae/geometry.hpp"
#include "dvae/rng.hpp"

namespace dvae::model {

using geometry::UnitVector;

/// Lower bound on the diffusion time produced by the encoder.
inline constexpr double kTimeFloor = 1e-4;

/// Per-step noise scale of the random walk.
///  - brownian: sqrt(t / L), so L steps accumulate variance t.
///  - verbatim: t, the step rule exactly as printed.
enum class StepMode { brownian, verbatim };

std::string_view to_string(StepMode mode) noexcept;
/// Throws std::invalid_argument for an unknown name.
StepMode step_mode_from_string(std::string_view name);

double step_scale(double t, std::size_t walk_length, StepMode mode);

/// Location and diffusion time of the posterior. Throws std::invalid_argument
/// if t is below kTimeFloor or not finite.
struct PosteriorParams {
  PosteriorParams(UnitVector mu, double t);

  UnitVector mu;
  double t;
};

/// Noise draws and visited states of one walk. states.front() is the
/// posterior mean and states.back() the sample.
struct WalkTrace {
  std::vector<std::vector<double>> eps;
  std::vector<UnitVector> states;

  const UnitVector& sample() const { return states.back(); }
};

/// Draws L standard-normal vectors from `rng` and runs the walk.
WalkTrace sample_posterior(const PosteriorParams& params, std::size_t walk_length,
                           StepMode mode, Rng& rng);

/// Runs the walk with recorded noise: z_{l+1} = P(z_l + eps_l * scale).
WalkTrace replay_walk(const PosteriorParams& params, std::vector<std::vector<double>> eps,
                      StepMode mode);

/// KL(Q || uniform) ~= -(d/2) log(2 pi t) - d/2 + log Vol(S^d) + d(d-1) t / 4.
double kl_divergence(double t, std::size_t sphere_dim);
/// d/dt of kl_divergence: -d/(2t) + d(d-1)/4.
double kl_divergence_dt(double t, std::size_t sphere_dim);

/// log N(x; mu_x, I) = -|x - mu_x|^2 / 2 - (n/2) log(2 pi).
/// Throws ShapeMismatch when the lengths differ.
double reconstruction_loglik(std::span<const double> x, std::span<const double> mu_x);

struct ElboBreakdown {
  double reconstruction_loglik = 0.0;
  double kl = 0.0;
  double capacity = 0.0;
  double beta = 1.0;
  double objective = 0.0;
};

/// objective = reconstruction - beta * |kl - capacity|.
ElboBreakdown make_breakdown(double reconstruction_loglik, double kl, double capacity,
                             double beta);

using DecoderFn = std::function<std::vector<double>(const UnitVector&)>;

/// Single-walk Monte Carlo estimate of the objective for one data point.
ElboBreakdown elbo(std::span<const double> x, const PosteriorParams& params,
                   const DecoderFn& decoder, double beta, double capacity,
                   std::size_t walk_length, StepMode mode, Rng& rng);

}  // namespace dvae::model
