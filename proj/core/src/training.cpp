// SPDX-License-Identifier: Apache-2.0
#include "dvae/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <thread>

#include "dvae/errors.hpp"
#include "dvae/network.hpp"

namespace dvae::training {

double capacity_schedule(std::size_t epoch, const TrainConfig& config) {
  if (config.anneal_epochs <= 1) return config.C_max;
  const double frac = std::min(
      1.0, static_cast<double>(epoch) / static_cast<double>(config.anneal_epochs - 1));
  return config.C_min + (config.C_max - config.C_min) * frac;
}

void optimizer_step(ParameterSet& params, const ParameterSet& grads, ParameterSet& m,
                    ParameterSet& v, std::uint64_t step, double lr, const AdamHyper& h) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw ShapeMismatch("optimizer: parameter, gradient and moment sets differ in length");
  }
  if (step == 0) throw std::invalid_argument("optimizer step count is 1-based");
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    const auto g = grads[i].data();
    auto mi = m[i].data();
    auto vi = v[i].data();
    if (g.size() != p.size() || mi.size() != p.size() || vi.size() != p.size()) {
      throw ShapeMismatch("optimizer: shape mismatch for parameter '" + params.name(i) + "'");
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      mi[j] = h.beta1 * mi[j] + (1.0 - h.beta1) * g[j];
      vi[j] = h.beta2 * vi[j] + (1.0 - h.beta2) * g[j] * g[j];
      const double m_hat = mi[j] / c1;
      const double v_hat = vi[j] / c2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
}

TrainState initialize_training(const TrainConfig& config, std::size_t input_dim) {
  config.validate();
  const Rng root(config.seed);
  Rng init = root.split(streams::kInit);
  TrainState s;
  s.input_dim = input_dim;
  s.params = model::init_parameters(config.network_shape(input_dim), init);
  s.first_moment = s.params.zeros_like();
  s.second_moment = s.params.zeros_like();
  s.shuffle_rng = root.split(streams::kShuffle);
  s.walk_rng = root.split(streams::kWalk);
  return s;
}

namespace {

struct SampleResult {
  model::ElboBreakdown breakdown;
  ParameterSet grad;  // only used when fanning out
};

// Evaluates samples [begin, end) of a batch into `out`, one graph per worker.
void run_samples(model::ObjectiveGraph& graph, const data::LabeledDataset& data,
                 std::span<const std::size_t> indices, std::span<const double> noise,
                 double capacity, std::size_t begin, std::size_t end,
                 std::vector<SampleResult>& out) {
  const std::size_t k = graph.noise_size();
  for (std::size_t i = begin; i < end; ++i) {
    out[i].breakdown =
        graph.evaluate(data.observation(indices[i]), noise.subspan(i * k, k), capacity);
    graph.backward();
    for (auto& t : out[i].grad.tensors()) t.fill(0.0);
    graph.accumulate_gradients(out[i].grad, 1.0);
  }
}

}  // namespace

EpochReport train_epoch(TrainState& state, const data::LabeledDataset& data,
                        const TrainConfig& config, const TrainOptions& options) {
  if (data.dim() != state.input_dim) {
    throw ShapeMismatch("dataset dimension " + std::to_string(data.dim()) +
                        " does not match model input " + std::to_string(state.input_dim));
  }
  if (state.epoch >= config.epochs) {
    throw std::invalid_argument("epoch " + std::to_string(state.epoch) +
                                " is past the configured " + std::to_string(config.epochs));
  }
  TrainState next = state;
  const std::size_t epoch = next.epoch;
  const double capacity = capacity_schedule(epoch, config);
  const model::NetworkShape shape = config.network_shape(next.input_dim);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[next.shuffle_rng.uniform_index(i)]);
  }

  const std::size_t workers =
      std::max<std::size_t>(1, std::min(options.threads, config.batch_size));
  std::vector<model::ObjectiveGraph> graphs;
  graphs.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    graphs.emplace_back(shape, next.params, config.objective_settings());
  }
  const std::size_t noise_size = graphs.front().noise_size();

  ParameterSet grad = next.params.zeros_like();
  std::vector<SampleResult> results;
  std::vector<double> noise;
  double sum_objective = 0.0, sum_kl = 0.0, sum_recon = 0.0;

  const std::size_t batches = (data.size() + config.batch_size - 1) / config.batch_size;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t first = b * config.batch_size;
    const std::size_t count = std::min(config.batch_size, data.size() - first);
    const std::span<const std::size_t> indices(order.data() + first, count);

    noise.resize(count * noise_size);
    for (double& e : noise) e = next.walk_rng.normal();

    for (auto& g : graphs) g.load_parameters(next.params);
    for (auto& t : grad.tensors()) t.fill(0.0);
    const double factor = -1.0 / static_cast<double>(count);

    try {
      if (workers == 1) {
        auto& graph = graphs.front();
        for (std::size_t i = 0; i < count; ++i) {
          const auto br = graph.evaluate(data.observation(indices[i]),
                                         std::span<const double>(noise).subspan(i * noise_size, noise_size),
                                         capacity);
          graph.backward();
          graph.accumulate_gradients(grad, factor);
          sum_objective += br.objective;
          sum_kl += br.kl;
          sum_recon += br.reconstruction_loglik;
        }
      } else {
        results.resize(count);
        for (auto& r : results) {
          if (r.grad.size() == 0) r.grad = next.params.zeros_like();
        }
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        const std::size_t chunk = (count + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
          const std::size_t begin = std::min(count, w * chunk);
          const std::size_t end = std::min(count, begin + chunk);
          pool.emplace_back([&, w, begin, end] {
            try {
              run_samples(graphs[w], data, indices, noise, capacity, begin, end, results);
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors) {
          if (e) std::rethrow_exception(e);
        }
        for (std::size_t i = 0; i < count; ++i) {
          for (std::size_t p = 0; p < grad.size(); ++p) {
            auto dst = grad[p].data();
            const auto src = results[i].grad[p].data();
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += factor * src[j];
          }
          sum_objective += results[i].breakdown.objective;
          sum_kl += results[i].breakdown.kl;
          sum_recon += results[i].breakdown.reconstruction_loglik;
        }
      }
    } catch (const NonFiniteValue& e) {
      throw NonFiniteValue("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                               ": " + e.what(),
                           epoch, b);
    } catch (const DegenerateVector& e) {
      throw NonFiniteValue("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                               ": " + e.what(),
                           epoch, b);
    }

    ++next.optimizer_steps;
    optimizer_step(next.params, grad, next.first_moment, next.second_moment,
                   next.optimizer_steps, config.learning_rate);
  }

  const double n = static_cast<double>(data.size());
  EpochReport report{epoch, sum_objective / n, sum_kl / n, sum_recon / n, capacity};
  next.history.push_back(report);
  next.epoch = epoch + 1;
  state = std::move(next);
  return report;
}

void train(TrainState& state, const data::LabeledDataset& data, const TrainConfig& config,
           const TrainOptions& options, const EpochCallback& on_epoch) {
  while (state.epoch < config.epochs) {
    const EpochReport report = train_epoch(state, data, config, options);
    if (on_epoch) on_epoch(state, report);
  }
}

}  // namespace dvae::training
