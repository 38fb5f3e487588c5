// SPDX-License-Identifier: Apache-2.0
#include "dvae/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dvae/errors.hpp"

namespace dvae::geometry {

UnitVector::UnitVector(std::vector<double> coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) {
    throw DegenerateVector("unit vector needs at least 2 coordinates, got " +
                           std::to_string(coords_.size()));
  }
  const double n = norm(coords_);
  if (!(std::abs(n - 1.0) <= kUnitNormTolerance)) {
    throw DegenerateVector("coordinates are not unit norm (|v| = " +
                           std::to_string(n) + ")");
  }
}

UnitVector UnitVector::basis(std::size_t sphere_dim, std::size_t axis) {
  std::vector<double> c(sphere_dim + 1, 0.0);
  c.at(axis) = 1.0;
  return UnitVector(std::move(c));
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> v) noexcept { return std::sqrt(dot(v, v)); }

UnitVector project(std::span<const double> v) {
  if (v.size() < 2) throw DegenerateVector("projection needs dimension >= 2");
  const double n = norm(v);
  if (!(n > kProjectionEpsilon)) {
    throw DegenerateVector("cannot project vector with norm " + std::to_string(n));
  }
  std::vector<double> u(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) u[i] = v[i] / n;
  return UnitVector(UnitVector::Unchecked{}, std::move(u));
}

SquareMatrix project_jacobian(std::span<const double> v) {
  const UnitVector u = project(v);
  const double inv = 1.0 / norm(v);
  const std::size_t k = v.size();
  SquareMatrix j{k, std::vector<double>(k * k)};
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      j.data[r * k + c] = ((r == c ? 1.0 : 0.0) - u[r] * u[c]) * inv;
    }
  }
  return j;
}

void project_vjp(std::span<const double> u, double v_norm,
                 std::span<const double> grad_out, std::span<double> grad_in) noexcept {
  const double ug = dot(u, grad_out);
  for (std::size_t i = 0; i < u.size(); ++i) {
    grad_in[i] += (grad_out[i] - u[i] * ug) / v_norm;
  }
}

UnitVector uniform_sample(std::size_t sphere_dim, Rng& rng) {
  std::vector<double> g(sphere_dim + 1);
  for (;;) {
    for (double& x : g) x = rng.normal();
    if (norm(g) > kProjectionEpsilon) return project(g);
  }
}

double geodesic_distance(const UnitVector& u, const UnitVector& v) noexcept {
  return std::acos(std::clamp(dot(u.coords(), v.coords()), -1.0, 1.0));
}

double log_sphere_volume(std::size_t sphere_dim) {
  const double half = 0.5 * static_cast<double>(sphere_dim + 1);
  return std::numbers::ln2 + half * std::log(std::numbers::pi) - std::lgamma(half);
}

double sphere_volume(std::size_t sphere_dim) {
  return std::exp(log_sphere_volume(sphere_dim));
}

}  // namespace dvae::geometry
