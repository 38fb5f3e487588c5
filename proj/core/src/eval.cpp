// SPDX-License-Identifier: Apache-2.0
#include "dvae/eval.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>


#include "dvae/errors.hpp"

namespace dvae::eval {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace

double kl_oracle_circle(double t, std::size_t grid_size) {
  if (!(t > 0.0) || t > 100.0) throw std::invalid_argument("oracle needs 0 < t <= 100");
  if (grid_size < 1024) throw std::invalid_argument("oracle needs grid_size >= 1024");
  constexpr int kImages = 10;
  const double h = kTwoPi / static_cast<double>(grid_size);
  const double log_norm = -0.5 * std::log(kTwoPi * t);
  double total = 0.0;
  double exps[2 * kImages + 1];
  for (std::size_t j = 0; j < grid_size; ++j) {
    const double phi = -kPi + (static_cast<double>(j) + 0.5) * h;
    double peak = -std::numeric_limits<double>::infinity();
    for (int k = -kImages; k <= kImages; ++k) {
      const double x = phi + kTwoPi * k;
      exps[k + kImages] = -x * x / (2.0 * t);
      peak = std::max(peak, exps[k + kImages]);
    }
    double s = 0.0;
    for (double e : exps) s += std::exp(e - peak);
    const double log_q = log_norm + peak + std::log(s);
    const double q = std::exp(log_q);
    if (q > 0.0) total += q * (std::log(kTwoPi) + log_q);
  }
  return total * h;
}

double fisher_lee_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("angle samples differ in length");
  double ss = 0, cc = 0, sc = 0, cs = 0;  // sums of sin a sin b, cos a cos b, ...
  double saa = 0, caa = 0, sca = 0, sbb = 0, cbb = 0, scb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double sa = std::sin(a[i]), ca = std::cos(a[i]);
    const double sb = std::sin(b[i]), cb = std::cos(b[i]);
    ss += sa * sb;
    cc += ca * cb;
    sc += sa * cb;
    cs += ca * sb;
    saa += sa * sa;
    caa += ca * ca;
    sca += sa * ca;
    sbb += sb * sb;
    cbb += cb * cb;
    scb += sb * cb;
  }
  // sum_{i<j} sin(a_i - a_j) sin(b_i - b_j) = ss*cc - sc*cs, and similarly
  // for the squared terms.
  const double num = ss * cc - sc * cs;
  const double den_a = saa * caa - sca * sca;
  const double den_b = sbb * cbb - scb * scb;
  if (!(den_a > 0.0) || !(den_b > 0.0)) return 0.0;
  return std::clamp(num / std::sqrt(den_a * den_b), -1.0, 1.0);
}

RecoveryScore recover_periodic_factor(std::span<const UnitVector> codes,
                                      std::span<const double> true_angles) {
  if (codes.size() != true_angles.size()) {
    throw std::invalid_argument("codes and angles differ in length");
  }
  if (codes.size() < 10) throw std::invalid_argument("need at least 10 codes");
  const std::size_t k = codes.front().ambient_dim();
  const auto n = static_cast<Eigen::Index>(codes.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& c = codes[static_cast<std::size_t>(i)];
    if (c.ambient_dim() != k) throw std::invalid_argument("codes differ in dimension");
    for (std::size_t j = 0; j < k; ++j) x(i, static_cast<Eigen::Index>(j)) = c[j];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const auto& values = eig.eigenvalues();  // ascending
  const Eigen::Index last = values.size() - 1;
  const double trace = values.sum();

  RecoveryScore score;
  const Eigen::VectorXd u = eig.eigenvectors().col(last);
  const Eigen::VectorXd v = eig.eigenvectors().col(last - 1);
  score.plane_u.assign(u.data(), u.data() + u.size());
  score.plane_v.assign(v.data(), v.data() + v.size());
  score.explained_variance_top2 =
      trace > 0.0 ? std::max(0.0, values(last) + values(last - 1)) / trace : 0.0;
  if (score.explained_variance_top2 < kMinExplainedVariance) {
    score.degenerate_cloud = true;
    return score;
  }
  const Eigen::VectorXd pu = x * u;
  const Eigen::VectorXd pv = x * v;
  std::vector<double> phi(codes.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    phi[i] = std::atan2(pv(static_cast<Eigen::Index>(i)), pu(static_cast<Eigen::Index>(i)));
  }
  score.circular_correlation = std::abs(fisher_lee_correlation(phi, true_angles));
  return score;
}

RecoveryScore recover_periodic_factors(std::span<const UnitVector> codes,
                                       const data::LabeledDataset& data) {
  RecoveryScore headline;
  bool first = true;
  for (std::size_t f = 0; f < data.factor_count(); ++f) {
    const auto& col = data.factor_columns()[f];
    if (col.kind != data::FactorKind::periodic) continue;
    const std::vector<double> angles = data.factor_values(f);
    RecoveryScore s = recover_periodic_factor(codes, angles);
    if (first) {
      headline = s;
      headline.per_factor.clear();
      first = false;
    }
    headline.per_factor.push_back({col.name, s.circular_correlation});
  }
  if (first) throw std::invalid_argument("dataset has no periodic factor");
  return headline;
}

UnitVector great_circle_point(const UnitVector& center, std::span<const double> direction,
                              double angle) {
  if (direction.size() != center.ambient_dim()) {
    throw ShapeMismatch("traversal direction has the wrong dimension");
  }
  const double along = geometry::dot(center.coords(), direction);
  std::vector<double> w(direction.begin(), direction.end());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= along * center[i];
  const double wn = geometry::norm(w);
  if (!(wn > 1e-9 * std::max(1.0, geometry::norm(direction)))) {
    throw DegenerateDirection("traversal direction is parallel to the center");
  }
  const double c = std::cos(angle), s = std::sin(angle);
  std::vector<double> p(w.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = c * center[i] + s * (w[i] / wn);
  return geometry::project(p);
}

TraversalReport traverse(const model::DecoderFn& decoder, const UnitVector& center,
                         std::span<const double> direction, std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("traversal needs at least one step");
  TraversalReport report;
  for (std::size_t k = 0; k < steps; ++k) {
    const double angle = kTwoPi * static_cast<double>(k) / static_cast<double>(steps);
    report.path.push_back(great_circle_point(center, direction, angle));
    report.decodes.push_back(decoder(report.path.back()));
  }
  return report;
}

std::string TraversalReport::to_csv() const {
  std::ostringstream out;
  const std::size_t k = path.empty() ? 0 : path.front().ambient_dim();
  const std::size_t n = decodes.empty() ? 0 : decodes.front().size();
  out << "step,angle";
  for (std::size_t j = 0; j < k; ++j) out << ",z" << j;
  for (std::size_t j = 0; j < n; ++j) out << ",x" << j;
  out << '\n';
  for (std::size_t s = 0; s < path.size(); ++s) {
    out << s << ',' << fmt(kTwoPi * static_cast<double>(s) / static_cast<double>(path.size()));
    for (double v : path[s].coords()) out << ',' << fmt(v);
    for (double v : decodes[s]) out << ',' << fmt(v);
    out << '\n';
  }
  return out.str();
}

std::vector<std::size_t> argmax_positions(const std::vector<std::vector<double>>& decodes) {
  std::vector<std::size_t> out;
  out.reserve(decodes.size());
  for (const auto& d : decodes) {
    out.push_back(static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin()));
  }
  return out;
}

bool is_cyclically_monotone(std::span<const std::size_t> positions, std::size_t n) {
  int direction = 0;
  for (std::size_t i = 0; i + 1 < positions.size(); ++i) {
    auto diff = static_cast<long long>(positions[i + 1]) - static_cast<long long>(positions[i]);
    const auto nn = static_cast<long long>(n);
    diff = ((diff % nn) + nn) % nn;
    if (diff > nn / 2) diff -= nn;
    if (diff == 0) continue;
    const int sign = diff > 0 ? 1 : -1;
    if (direction == 0) {
      direction = sign;
    } else if (sign != direction) {
      return false;
    }
  }
  return true;
}

ModelEvaluation evaluate_model(const model::NetworkShape& shape,
                               const autodiff::ParameterSet& params,
                               std::size_t walk_length, model::StepMode mode,
                               const data::LabeledDataset& data, std::uint64_t seed) {
  if (data.dim() != shape.input_dim) {
    throw ShapeMismatch("dataset dimension " + std::to_string(data.dim()) +
                        " does not match model input " + std::to_string(shape.input_dim));
  }
  model::Encoder encoder(shape, params);
  model::Decoder decoder(shape, params);
  Rng rng = Rng(seed).split(streams::kSample);
  ModelEvaluation ev;
  ev.codes.reserve(data.size());
  double recon = 0.0, kl = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.observation(i);
    const model::PosteriorParams post = encoder(x);
    const auto walk = model::sample_posterior(post, walk_length, mode, rng);
    recon += model::reconstruction_loglik(x, decoder(walk.sample()));
    kl += model::kl_divergence(post.t, shape.sphere_dim);
    ev.codes.push_back(post.mu);
  }
  ev.reconstruction_loglik_mean = recon / static_cast<double>(data.size());
  ev.kl_mean = kl / static_cast<double>(data.size());
  if (data.size() >= 10) ev.recovery = recover_periodic_factors(ev.codes, data);
  return ev;
}

}  // namespace dvae::eval
