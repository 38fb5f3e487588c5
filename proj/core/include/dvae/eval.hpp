// SPDX-License-Identifier: Apache-2.0
#pragma once

// Validation oracles and representation diagnostics.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dvae/autodiff/tensor.hpp"
#include "dvae/data.hpp"
#include "dvae/geometry.hpp"
#include "dvae/model.hpp"
#include "dvae/network.hpp"

namespace dvae::eval {

using geometry::UnitVector;

/// KL(WN(0, t) || Uniform(S^1)) = integral of q log(2 pi q) over the circle,
/// where q is the wrapped normal density with variance t, its image sum
/// truncated at |k| <= 10. Midpoint rule with `grid_size` nodes.
/// Throws std::invalid_argument unless 0 < t <= 100 and grid_size >= 1024.
double kl_oracle_circle(double t, std::size_t grid_size = 4096);

/// Fisher-Lee circular correlation of two angle samples, in [-1, 1].
/// Computed in O(n) from trigonometric moments.
double fisher_lee_correlation(std::span<const double> a, std::span<const double> b);

struct FactorScore {
  std::string name;
  double circular_correlation = 0.0;
};

struct RecoveryScore {
  /// |Fisher-Lee correlation| between the true angles and the code angles on
  /// the best-fit great circle; absorbs orientation and offset.
  double circular_correlation = 0.0;
  /// Fraction of code-cloud variance captured by the top two principal axes.
  double explained_variance_top2 = 0.0;
  /// Set when explained_variance_top2 < 0.5; the score is then 0.
  bool degenerate_cloud = false;
  std::vector<FactorScore> per_factor;
  /// Top two principal directions (unit, orthogonal) of the code cloud.
  std::vector<double> plane_u;
  std::vector<double> plane_v;
};

inline constexpr double kMinExplainedVariance = 0.5;

/// Fits the best great circle to `codes` (top two principal directions of
/// the centered cloud), reads off each code's angle in that plane and scores
/// it against `true_angles`. Throws std::invalid_argument when the lists
/// differ in length or hold fewer than 10 codes.
RecoveryScore recover_periodic_factor(std::span<const UnitVector> codes,
                                      std::span<const double> true_angles);

/// Scores every periodic factor of `data`; the headline correlation is that
/// of the first periodic factor.
RecoveryScore recover_periodic_factors(std::span<const UnitVector> codes,
                                       const data::LabeledDataset& data);

struct TraversalReport {
  std::vector<UnitVector> path;
  std::vector<std::vector<double>> decodes;

  /// step,angle,z0..zd,x0..x{n-1}
  std::string to_csv() const;
};

/// cos(angle) * center + sin(angle) * w, with w the unit component of
/// `direction` orthogonal to `center`. Throws DegenerateDirection when
/// `direction` is (numerically) parallel to `center`.
UnitVector great_circle_point(const UnitVector& center, std::span<const double> direction,
                              double angle);

/// Full 2 pi sweep of the great circle through `center` in the plane of
/// (center, direction), in `steps` equal increments starting at `center`.
TraversalReport traverse(const model::DecoderFn& decoder, const UnitVector& center,
                         std::span<const double> direction, std::size_t steps);

/// Index of the largest entry of each decode.
std::vector<std::size_t> argmax_positions(const std::vector<std::vector<double>>& decodes);

/// True when consecutive positions (mod n) all move in the same rotational
/// direction, with steps taken as the shortest signed difference.
bool is_cyclically_monotone(std::span<const std::size_t> positions, std::size_t n);

struct ModelEvaluation {
  double reconstruction_loglik_mean = 0.0;
  double kl_mean = 0.0;
  RecoveryScore recovery;
  std::vector<UnitVector> codes;  // encoder means
};

/// Encodes every observation, draws one posterior walk per point from a
/// stream of `seed`, and scores the encoder means against the periodic factors.
ModelEvaluation evaluate_model(const model::NetworkShape& shape,
                               const autodiff::ParameterSet& params,
                               std::size_t walk_length, model::StepMode mode,
                               const data::LabeledDataset& data, std::uint64_t seed);

}  // namespace dvae::eval
