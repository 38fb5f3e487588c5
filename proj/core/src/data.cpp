// SPDX-License-Identifier: Apache-2.0
#include "dvae/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dvae/errors.hpp"
#include "dvae/rng.hpp"

namespace dvae::data {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::string_view kPeriodicPrefix = "f_periodic_";
constexpr std::string_view kLinearPrefix = "f_linear_";

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double(std::string_view s, std::size_t line) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("invalid number '" + std::string(s) + "'", line);
  }
  return v;
}

std::string format_shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

LabeledDataset generate(std::size_t count, std::size_t n, double noise_sigma,
                        std::uint64_t seed, bool with_scale) {
  if (count == 0) throw std::invalid_argument("dataset size must be positive");
  if (n < 2) throw std::invalid_argument("observation dimension must be at least 2");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be non-negative");
  Rng factor_rng = Rng(seed).split(streams::kData);
  Rng noise_rng = factor_rng.split(1);
  std::vector<FactorColumn> cols{{"theta", FactorKind::periodic}};
  if (with_scale) cols.push_back({"scale", FactorKind::linear});
  std::vector<double> obs;
  std::vector<double> factors;
  obs.reserve(count * n);
  factors.reserve(count * cols.size());
  for (std::size_t i = 0; i < count; ++i) {
    const double theta = kTwoPi * factor_rng.uniform();
    const double s = with_scale ? 0.5 + 0.5 * factor_rng.uniform() : 1.0;
    factors.push_back(theta);
    if (with_scale) factors.push_back(s);
    for (double v : ring_profile(theta, n)) obs.push_back(s * v + noise_sigma * noise_rng.normal());
  }
  return LabeledDataset(n, std::move(obs), std::move(cols), std::move(factors));
}

}  // namespace

LabeledDataset::LabeledDataset(std::size_t dim, std::vector<double> observations,
                               std::vector<FactorColumn> factor_columns,
                               std::vector<double> factors)
    : dim_(dim),
      count_(dim == 0 ? 0 : observations.size() / dim),
      observations_(std::move(observations)),
      columns_(std::move(factor_columns)),
      factors_(std::move(factors)) {
  if (dim_ == 0) throw std::invalid_argument("observation dimension must be positive");
  if (observations_.size() % dim_ != 0) {
    throw std::invalid_argument("observation buffer is not a whole number of rows");
  }
  if (count_ == 0) throw std::invalid_argument("dataset must contain at least one observation");
  if (factors_.size() != count_ * columns_.size()) {
    throw std::invalid_argument("factor matrix does not match observation count");
  }
  if (!std::all_of(observations_.begin(), observations_.end(),
                   [](double v) { return std::isfinite(v); })) {
    throw std::invalid_argument("observations must be finite");
  }
  for (std::size_t i = 0; i < count_; ++i) {
    for (std::size_t f = 0; f < columns_.size(); ++f) {
      const double v = factor(i, f);
      const bool ok = columns_[f].kind == FactorKind::periodic ? (v >= 0.0 && v < kTwoPi)
                                                               : (v >= 0.0 && v <= 1.0);
      if (!ok) {
        throw std::invalid_argument("factor '" + columns_[f].name + "' value " +
                                    format_double(v) + " out of range in row " +
                                    std::to_string(i));
      }
    }
  }
}

std::vector<double> LabeledDataset::factor_values(std::size_t f) const {
  std::vector<double> out(count_);
  for (std::size_t i = 0; i < count_; ++i) out[i] = factor(i, f);
  return out;
}

double ring_kappa() {
  // exp(-kappa (pi/8)^2) = 1/2
  const double half_width = std::numbers::pi / 8.0;
  return std::numbers::ln2 / (half_width * half_width);
}

double angular_distance(double a, double b) noexcept {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return d > std::numbers::pi ? kTwoPi - d : d;
}

std::vector<double> ring_profile(double theta, std::size_t n) {
  const double kappa = ring_kappa();
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double delta = angular_distance(theta, kTwoPi * static_cast<double>(j) /
                                                     static_cast<double>(n));
    v[j] = std::exp(-kappa * delta * delta);
  }
  return v;
}

LabeledDataset make_ring(std::size_t count, std::size_t n, double noise_sigma,
                         std::uint64_t seed) {
  return generate(count, n, noise_sigma, seed, false);
}

LabeledDataset make_ring_plus_scale(std::size_t count, std::size_t n, double noise_sigma,
                                    std::uint64_t seed) {
  return generate(count, n, noise_sigma, seed, true);
}

LabeledDataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty file: missing header row", 1);
  ++line_no;
  const auto header = split(trim(line), ',');

  std::vector<int> x_index(header.size(), -1);  // column -> observation index
  std::vector<FactorColumn> factor_cols;
  std::vector<int> factor_index(header.size(), -1);
  std::size_t x_count = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view name = trim(header[c]);
    if (name.size() > 1 && name[0] == 'x' &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      int idx = 0;
      std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      x_index[c] = idx;
      ++x_count;
    } else if (name.starts_with(kPeriodicPrefix) && name.size() > kPeriodicPrefix.size()) {
      factor_index[c] = static_cast<int>(factor_cols.size());
      factor_cols.push_back({std::string(name.substr(kPeriodicPrefix.size())), FactorKind::periodic});
    } else if (name.starts_with(kLinearPrefix) && name.size() > kLinearPrefix.size()) {
      factor_index[c] = static_cast<int>(factor_cols.size());
      factor_cols.push_back({std::string(name.substr(kLinearPrefix.size())), FactorKind::linear});
    } else {
      throw ParseError("unrecognized column '" + std::string(name) + "'", line_no);
    }
  }
  if (x_count == 0) throw MissingColumn("no observation columns (x0, x1, ...) in header");
  std::vector<bool> seen(x_count, false);
  for (int idx : x_index) {
    if (idx < 0) continue;
    if (static_cast<std::size_t>(idx) >= x_count || seen[static_cast<std::size_t>(idx)]) {
      throw MissingColumn("observation columns must be exactly x0..x" +
                          std::to_string(x_count - 1));
    }
    seen[static_cast<std::size_t>(idx)] = true;
  }

  std::vector<double> obs;
  std::vector<double> factors;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(cells.size()),
                       line_no);
    }
    obs.resize(obs.size() + x_count);
    factors.resize(factors.size() + factor_cols.size());
    double* orow = obs.data() + rows * x_count;
    double* frow = factors.data() + rows * factor_cols.size();
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_double(cells[c], line_no);
      if (x_index[c] >= 0) {
        if (!std::isfinite(v)) throw ParseError("non-finite observation", line_no);
        orow[x_index[c]] = v;
      } else {
        const auto& col = factor_cols[static_cast<std::size_t>(factor_index[c])];
        const bool ok = col.kind == FactorKind::periodic ? (v >= 0.0 && v < kTwoPi)
                                                         : (v >= 0.0 && v <= 1.0);
        if (!ok) throw ParseError("factor '" + col.name + "' value out of range", line_no);
        frow[factor_index[c]] = v;
      }
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("no data rows after header", line_no);
  return LabeledDataset(x_count, std::move(obs), std::move(factor_cols), std::move(factors));
}

LabeledDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::string to_csv(const LabeledDataset& data) {
  std::string out;
  for (std::size_t j = 0; j < data.dim(); ++j) {
    if (j) out += ',';
    out += "x" + std::to_string(j);
  }
  for (const auto& col : data.factor_columns()) {
    out += ',';
    out += col.kind == FactorKind::periodic ? kPeriodicPrefix : kLinearPrefix;
    out += col.name;
  }
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.observation(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += format_double(row[j]);
    }
    for (std::size_t f = 0; f < data.factor_count(); ++f) {
      out += ',';
      out += format_double(data.factor(i, f));
    }
    out += '\n';
  }
  return out;
}

void save_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_csv(data);
  if (!out) throw IoError("write failed: " + path.string());
}

DatasetSpec DatasetSpec::parse(const std::string& text) {
  DatasetSpec spec;
  const std::size_t colon = text.find(':');
  spec.generator = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (spec.generator == "csv") {
    if (rest.empty()) throw ConfigError("csv dataset needs a path: csv:<path>");
    spec.path = rest;
    return spec;
  }
  if (spec.generator != "ring" && spec.generator != "ring_plus_scale") {
    throw ConfigError("unknown dataset generator '" + spec.generator + "'");
  }
  if (rest.empty()) return spec;
  for (const std::string_view kv : split(rest, ',')) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("dataset option '" + std::string(kv) + "' is not key=value");
    }
    const std::string key(trim(kv.substr(0, eq)));
    const std::string value(trim(kv.substr(eq + 1)));
    try {
      std::size_t used = 0;
      if (key == "N") {
        spec.count = std::stoull(value, &used);
      } else if (key == "n") {
        spec.dim = std::stoull(value, &used);
      } else if (key == "noise") {
        spec.noise_sigma = std::stod(value, &used);
      } else if (key == "seed") {
        spec.seed = std::stoull(value, &used);
      } else {
        throw ConfigError("unknown dataset option '" + key + "'");
      }
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::logic_error&) {
      throw ConfigError("invalid value for dataset option '" + key + "': " + value);
    }
  }
  if (spec.count == 0 || spec.dim < 2 || !(spec.noise_sigma >= 0.0)) {
    throw ConfigError("dataset requires N >= 1, n >= 2 and noise >= 0");
  }
  return spec;
}

std::string DatasetSpec::to_string() const {
  if (generator == "csv") return "csv:" + path.string();
  return generator + ":N=" + std::to_string(count) + ",n=" + std::to_string(dim) +
         ",noise=" + format_shortest(noise_sigma) + ",seed=" + std::to_string(seed);
}

LabeledDataset make_dataset(const DatasetSpec& spec) {
  if (spec.generator == "csv") return load_csv(spec.path);
  if (spec.generator == "ring") return make_ring(spec.count, spec.dim, spec.noise_sigma, spec.seed);
  if (spec.generator == "ring_plus_scale") {
    return make_ring_plus_scale(spec.count, spec.dim, spec.noise_sigma, spec.seed);
  }
  throw ConfigError("unknown dataset generator '" + spec.generator + "'");
}

}  // namespace dvae::data
