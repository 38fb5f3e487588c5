// SPDX-License-Identifier: Apache-2.0
#include "dvae/data.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dvae/errors.hpp"
#include "test_support.hpp"

namespace dvae::data {
namespace {

using dvae::testing::TempDir;
using dvae::testing::write_file;
constexpr double kTwoPi = 2 * std::numbers::pi;

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

TEST(Ring, BumpWidthIsAnEighthOfTheRing) {
  // Half maximum at angular distance pi/8, i.e. full width n/8 entries.
  EXPECT_NEAR(std::exp(-ring_kappa() * std::pow(std::numbers::pi / 8, 2)), 0.5, 1e-15);
}

TEST(Ring, BumpCentredAtTheta) {
  EXPECT_EQ(argmax(ring_profile(0.0, 32)), 0u);
  EXPECT_EQ(argmax(ring_profile(kTwoPi * 5 / 32, 32)), 5u);
  EXPECT_EQ(ring_profile(0.0, 32)[0], 1.0);
}

TEST(Ring, Periodic) {
  for (double theta : {0.0, 0.3, 2.0, 5.9}) {
    const auto a = ring_profile(theta, 16);
    const auto b = ring_profile(theta + kTwoPi, 16);
    for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(a[j], b[j], 1e-12);
  }
}

TEST(Ring, AngularDistance) {
  EXPECT_NEAR(angular_distance(0.1, kTwoPi - 0.1), 0.2, 1e-15);
  EXPECT_NEAR(angular_distance(0.0, std::numbers::pi), std::numbers::pi, 1e-15);
  EXPECT_EQ(angular_distance(1.0, 1.0), 0.0);
}

TEST(Ring, FactorsInRangeAndDeterministic) {
  const LabeledDataset a = make_ring(500, 32, 0.05, 7);
  EXPECT_EQ(a.size(), 500u);
  EXPECT_EQ(a.dim(), 32u);
  ASSERT_EQ(a.factor_count(), 1u);
  EXPECT_EQ(a.factor_columns()[0].kind, FactorKind::periodic);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_GE(a.factor(i, 0), 0.0);
    EXPECT_LT(a.factor(i, 0), kTwoPi);
  }
  EXPECT_EQ(make_ring(500, 32, 0.05, 7), a);
  EXPECT_NE(make_ring(500, 32, 0.05, 8), a);
}

TEST(Ring, NoiselessObservationsAreProfiles) {
  const LabeledDataset a = make_ring(20, 12, 0.0, 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto want = ring_profile(a.factor(i, 0), 12);
    const auto got = a.observation(i);
    for (std::size_t j = 0; j < 12; ++j) EXPECT_EQ(got[j], want[j]);
  }
}

TEST(Ring, NoiseHasRequestedSpread) {
  const LabeledDataset noisy = make_ring(400, 16, 0.2, 9);
  double sq = 0.0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const auto clean = ring_profile(noisy.factor(i, 0), 16);
    for (std::size_t j = 0; j < 16; ++j) sq += std::pow(noisy.observation(i)[j] - clean[j], 2);
  }
  EXPECT_NEAR(std::sqrt(sq / (400.0 * 16.0)), 0.2, 0.01);
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

TEST(Ring, ObservationDistanceTracksAngularDistance) {
  const LabeledDataset d = make_ring(1000, 32, 0.05, 0);
  std::vector<double> obs_dist, ang_dist;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t k = i + 1; k < d.size(); ++k) {
      const double a = angular_distance(d.factor(i, 0), d.factor(k, 0));
      if (a >= std::numbers::pi / 2) continue;
      double sq = 0.0;
      for (std::size_t j = 0; j < 32; ++j) {
        sq += std::pow(d.observation(i)[j] - d.observation(k)[j], 2);
      }
      obs_dist.push_back(std::sqrt(sq));
      ang_dist.push_back(a);
    }
  }
  EXPECT_GT(pearson(ranks(obs_dist), ranks(ang_dist)), 0.9);
}

TEST(RingPlusScale, ObservationIsScaledProfile) {
  const LabeledDataset d = make_ring_plus_scale(300, 16, 0.0, 4);
  ASSERT_EQ(d.factor_count(), 2u);
  EXPECT_EQ(d.factor_columns()[1].kind, FactorKind::linear);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double s = d.factor(i, 1);
    EXPECT_GE(s, 0.5);
    EXPECT_LE(s, 1.0);
    const auto profile = ring_profile(d.factor(i, 0), 16);
    for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(d.observation(i)[j], s * profile[j], 1e-15);
  }
}

TEST(RingPlusScale, FactorsAreIndependent) {
  const LabeledDataset d = make_ring_plus_scale(10000, 8, 0.05, 11);
  const auto theta = d.factor_values(0);
  const auto s = d.factor_values(1);
  EXPECT_LT(std::abs(pearson(theta, s)), 0.05);
  std::vector<double> c(theta.size()), sn(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    c[i] = std::cos(theta[i]);
    sn[i] = std::sin(theta[i]);
  }
  EXPECT_LT(std::abs(pearson(c, s)), 0.05);
  EXPECT_LT(std::abs(pearson(sn, s)), 0.05);
}

TEST(Dataset, ValidatesInvariants) {
  const std::vector<FactorColumn> periodic{{"a", FactorKind::periodic}};
  EXPECT_THROW(LabeledDataset(2, {}, {}, {}), std::invalid_argument);
  EXPECT_THROW(LabeledDataset(2, {1.0, 2.0, 3.0}, {}, {}), std::invalid_argument);
  EXPECT_THROW(LabeledDataset(1, {std::nan("")}, {}, {}), std::invalid_argument);
  EXPECT_THROW(LabeledDataset(1, {1.0}, periodic, {kTwoPi}), std::invalid_argument);
  EXPECT_THROW(LabeledDataset(1, {1.0}, {{"s", FactorKind::linear}}, {1.5}), std::invalid_argument);
  EXPECT_NO_THROW(LabeledDataset(1, {1.0}, periodic, {0.0}));
}

TEST(Csv, HandWrittenFixture) {
  const LabeledDataset d = load_csv(std::filesystem::path(DVAE_FIXTURE_DIR) / "three_rows.csv");
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dim(), 3u);
  EXPECT_EQ(d.observations(),
            (std::vector<double>{0.5, -1.25, 3.0, 1e-3, 2.5, 0.0, -0.75, 0.125, 42.0}));
  EXPECT_EQ(d.factor_columns(),
            (std::vector<FactorColumn>{{"angle", FactorKind::periodic},
                                       {"scale", FactorKind::linear}}));
  EXPECT_EQ(d.factors(), (std::vector<double>{0.0, 0.25, 3.14159, 1.0, 6.0, 0.5}));
}

TEST(Csv, ColumnsMayAppearInAnyOrder) {
  const LabeledDataset d = parse_csv("f_linear_s,x1,x0\n0.5,2,1\n");
  EXPECT_EQ(d.observations(), (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(d.factors(), (std::vector<double>{0.5}));
}

TEST(Csv, RoundTrip) {
  const LabeledDataset d = make_ring_plus_scale(50, 6, 0.1, 2);
  TempDir dir;
  save_csv(d, dir / "d.csv");
  const LabeledDataset back = load_csv(dir / "d.csv");
  ASSERT_EQ(back.size(), d.size());
  ASSERT_EQ(back.dim(), d.dim());
  EXPECT_EQ(back.factor_columns(), d.factor_columns());
  for (std::size_t i = 0; i < d.observations().size(); ++i)
    EXPECT_NEAR(back.observations()[i], d.observations()[i], 1e-12);
  for (std::size_t i = 0; i < d.factors().size(); ++i)
    EXPECT_NEAR(back.factors()[i], d.factors()[i], 1e-12);
  EXPECT_EQ(back, d);
}

TEST(Csv, Errors) {
  EXPECT_THROW(parse_csv(""), ParseError);
  try {
    parse_csv("x0,x1\n");
    FAIL() << "empty data section accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  try {
    parse_csv("x0,x1\n1,2\n3,oops\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(parse_csv("x0,x1\n1,2,3\n"), ParseError);
  EXPECT_THROW(parse_csv("x0,x2\n1,2\n"), MissingColumn);
  EXPECT_THROW(parse_csv("f_periodic_a\n1\n"), MissingColumn);
  EXPECT_THROW(parse_csv("x0,colour\n1,2\n"), ParseError);
  EXPECT_THROW(parse_csv("x0,f_periodic_a\n1,7\n"), ParseError);
  EXPECT_THROW(parse_csv("x0\nnan\n"), ParseError);
  TempDir dir;
  EXPECT_THROW(load_csv(dir / "absent.csv"), IoError);
}

TEST(DatasetSpec, ParseAndFormat) {
  const DatasetSpec s = DatasetSpec::parse("ring:N=100,n=8,noise=0.1,seed=3");
  EXPECT_EQ(s.generator, "ring");
  EXPECT_EQ(s.count, 100u);
  EXPECT_EQ(s.dim, 8u);
  EXPECT_EQ(s.noise_sigma, 0.1);
  EXPECT_EQ(s.seed, 3u);
  EXPECT_EQ(s.to_string(), "ring:N=100,n=8,noise=0.1,seed=3");
  EXPECT_EQ(DatasetSpec::parse("ring").to_string(), "ring:N=2000,n=32,noise=0.05,seed=0");
  EXPECT_EQ(DatasetSpec::parse("ring_plus_scale:N=5").count, 5u);
  const DatasetSpec c = DatasetSpec::parse("csv:/tmp/some file.csv");
  EXPECT_EQ(c.generator, "csv");
  EXPECT_EQ(c.path, "/tmp/some file.csv");
  EXPECT_THROW(DatasetSpec::parse("mnist"), ConfigError);
  EXPECT_THROW(DatasetSpec::parse("ring:K=3"), ConfigError);
  EXPECT_THROW(DatasetSpec::parse("ring:N=abc"), ConfigError);
  EXPECT_THROW(DatasetSpec::parse("ring:N=0"), ConfigError);
  EXPECT_THROW(DatasetSpec::parse("csv:"), ConfigError);
}

TEST(DatasetSpec, MakeDatasetDispatches) {
  EXPECT_EQ(make_dataset(DatasetSpec::parse("ring:N=30,n=8,noise=0.1,seed=3")),
            make_ring(30, 8, 0.1, 3));
  EXPECT_EQ(make_dataset(DatasetSpec::parse("ring_plus_scale:N=30,n=8,noise=0.1,seed=3")),
            make_ring_plus_scale(30, 8, 0.1, 3));
  const auto fixture = std::filesystem::path(DVAE_FIXTURE_DIR) / "three_rows.csv";
  EXPECT_EQ(make_dataset(DatasetSpec::parse("csv:" + fixture.string())), load_csv(fixture));
}

}  // namespace
}  // namespace dvae::data
