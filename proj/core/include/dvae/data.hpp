// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic datasets with known generating factors, and CSV interchange.
//
// CSV layout: a header row naming observation columns x0..x{n-1}, followed by
// factor columns prefixed f_periodic_ (radians in [0, 2pi)) or f_linear_
// (values in [0, 1]). UTF-8, comma separated, '.' decimal, LF line endings.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dvae::data {

enum class FactorKind { periodic, linear };

struct FactorColumn {
  std::string name;
  FactorKind kind;

  friend bool operator==(const FactorColumn&, const FactorColumn&) = default;
};

/// N observations of dimension n with F ground-truth factors. Factors are for
/// evaluation only; training never reads them.
class LabeledDataset {
 public:
  /// Validates every invariant and throws std::invalid_argument on violation.
  LabeledDataset(std::size_t dim, std::vector<double> observations,
                 std::vector<FactorColumn> factor_columns, std::vector<double> factors);

  std::size_t size() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t factor_count() const noexcept { return columns_.size(); }

  std::span<const double> observation(std::size_t i) const {
    return std::span<const double>(observations_).subspan(i * dim_, dim_);
  }
  double factor(std::size_t i, std::size_t f) const { return factors_[i * columns_.size() + f]; }
  /// Column f of the factor matrix.
  std::vector<double> factor_values(std::size_t f) const;

  const std::vector<FactorColumn>& factor_columns() const noexcept { return columns_; }
  const std::vector<double>& observations() const noexcept { return observations_; }
  const std::vector<double>& factors() const noexcept { return factors_; }

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

 private:
  std::size_t dim_;
  std::size_t count_;
  std::vector<double> observations_;
  std::vector<FactorColumn> columns_;
  std::vector<double> factors_;
};

/// Bump concentration for an n-entry ring: the bump's full width at half
/// maximum covers n/8 entries, i.e. an angle of pi/4.
double ring_kappa();

/// Noiseless ring observation: v_j = exp(-kappa * angdist(theta, 2 pi j / n)^2).
std::vector<double> ring_profile(double theta, std::size_t n);

/// Shortest angular distance between two angles, in [0, pi].
double angular_distance(double a, double b) noexcept;

/// One periodic factor theta ~ U[0, 2pi); x = ring_profile(theta) + N(0, sigma^2 I).
LabeledDataset make_ring(std::size_t count, std::size_t n, double noise_sigma,
                         std::uint64_t seed);

/// Factors (theta, s) with s ~ U[0.5, 1]; x = s * ring_profile(theta) + noise.
LabeledDataset make_ring_plus_scale(std::size_t count, std::size_t n, double noise_sigma,
                                    std::uint64_t seed);

/// Throws IoError, ParseError (with line number) or MissingColumn.
LabeledDataset load_csv(const std::filesystem::path& path);
LabeledDataset parse_csv(const std::string& text);
/// Values are written with 17 significant digits.
void save_csv(const LabeledDataset& data, const std::filesystem::path& path);
std::string to_csv(const LabeledDataset& data);

/// Dataset descriptor used by configs and the CLI:
///   ring[:N=2000,n=32,noise=0.05,seed=0]
///   ring_plus_scale[:...same keys...]
///   csv:<path>
struct DatasetSpec {
  std::string generator = "ring";
  std::size_t count = 2000;
  std::size_t dim = 32;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
  std::filesystem::path path;

  /// Throws ConfigError on an unknown generator or key.
  static DatasetSpec parse(const std::string& text);
  std::string to_string() const;
};

LabeledDataset make_dataset(const DatasetSpec& spec);

}  // namespace dvae::data
