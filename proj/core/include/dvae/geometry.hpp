// SPDX-License-Identifier: Apache-2.0
#pragma once

// Primitives on the hypersphere S^d, embedded in R^(d+1).

#include <cstddef>
#include <span>
#include <vector>

#include "dvae/rng.hpp"

namespace dvae::geometry {

/// Vectors with norm at or below this cannot be projected.
inline constexpr double kProjectionEpsilon = 1e-12;
/// Tolerance on the unit-norm invariant.
inline constexpr double kUnitNormTolerance = 1e-9;

/// A point on S^d, stored by its d+1 ambient coordinates.
class UnitVector {
 public:
  /// Wraps coordinates that are already unit norm. Throws DegenerateVector if
  /// the norm is off by more than kUnitNormTolerance or if fewer than two
  /// coordinates are given.
  explicit UnitVector(std::vector<double> coords);

  /// e_axis in R^(d+1).
  static UnitVector basis(std::size_t sphere_dim, std::size_t axis);

  std::span<const double> coords() const noexcept { return coords_; }
  const std::vector<double>& vector() const noexcept { return coords_; }
  double operator[](std::size_t i) const noexcept { return coords_[i]; }
  std::size_t ambient_dim() const noexcept { return coords_.size(); }
  std::size_t sphere_dim() const noexcept { return coords_.size() - 1; }

  friend bool operator==(const UnitVector&, const UnitVector&) = default;

 private:
  struct Unchecked {};
  UnitVector(Unchecked, std::vector<double> coords) : coords_(std::move(coords)) {}
  friend UnitVector project(std::span<const double> v);

  std::vector<double> coords_;
};

/// Dense square matrix, row-major.
struct SquareMatrix {
  std::size_t size = 0;
  std::vector<double> data;

  double operator()(std::size_t row, std::size_t col) const noexcept {
    return data[row * size + col];
  }
};

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double norm(std::span<const double> v) noexcept;

/// P(v) = v / |v|. Throws DegenerateVector when |v| <= kProjectionEpsilon.
UnitVector project(std::span<const double> v);

/// dP/dv = (I - u u^T) / |v| with u = P(v).
SquareMatrix project_jacobian(std::span<const double> v);

/// J^T g for J = dP/dv, without forming J. Since J is symmetric this is also
/// J g. `v` is the pre-projection vector, `u` its projection.
void project_vjp(std::span<const double> u, double v_norm,
                 std::span<const double> grad_out, std::span<double> grad_in) noexcept;

/// Sample from the rotation-invariant measure on S^d.
UnitVector uniform_sample(std::size_t sphere_dim, Rng& rng);

/// Great-circle distance in [0, pi].
double geodesic_distance(const UnitVector& u, const UnitVector& v) noexcept;

/// log Vol(S^d) = log 2 + ((d+1)/2) log(pi) - lgamma((d+1)/2).
double log_sphere_volume(std::size_t sphere_dim);
double sphere_volume(std::size_t sphere_dim);

}  // namespace dvae::geometry
