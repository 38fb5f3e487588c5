// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "dvae/data.hpp"
#include "dvae/geometry.hpp"
#include "dvae/model.hpp"
#include "dvae/network.hpp"
#include "dvae/training.hpp"

namespace {

using namespace dvae;

void BM_Project(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)) + 1);
  for (double& x : v) x = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(geometry::project(v));
}
BENCHMARK(BM_Project)->Arg(2)->Arg(10)->Arg(20);

void BM_SamplePosterior(benchmark::State& state) {
  Rng rng(2);
  const auto d = static_cast<std::size_t>(state.range(0));
  const model::PosteriorParams p(geometry::UnitVector::basis(d, 0), 0.05);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model::sample_posterior(p, 5, model::StepMode::brownian, rng));
  }
}
BENCHMARK(BM_SamplePosterior)->Arg(2)->Arg(10);

void BM_ObjectiveForwardBackward(benchmark::State& state) {
  Rng rng(3);
  const model::NetworkShape shape{32, static_cast<std::size_t>(state.range(0)), {64, 64}, {64, 64}};
  const auto params = model::init_parameters(shape, rng);
  model::ObjectiveGraph og(shape, params, {1.0, 5, model::StepMode::brownian});
  std::vector<double> x(32), eps(og.noise_size());
  for (double& v : x) v = rng.normal();
  for (double& v : eps) v = rng.normal();
  auto grad = params.zeros_like();
  for (auto _ : state) {
    benchmark::DoNotOptimize(og.evaluate(x, eps, 1.0));
    og.backward();
    og.accumulate_gradients(grad, 1.0);
  }
}
BENCHMARK(BM_ObjectiveForwardBackward)->Arg(2)->Arg(10);

void BM_TrainEpoch(benchmark::State& state) {
  training::TrainConfig c;
  c.d = 2;
  c.epochs = 1000000;
  c.anneal_epochs = c.epochs;
  const auto data = data::make_ring(256, 32, 0.05, 0);
  auto s = training::initialize_training(c, data.dim());
  for (auto _ : state) benchmark::DoNotOptimize(training::train_epoch(s, data, c));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
