// SPDX-License-Identifier: Apache-2.0
#include "dvae/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "dvae/checkpoint.hpp"
#include "dvae/config.hpp"
#include "dvae/data.hpp"
#include "dvae/errors.hpp"
#include "dvae/eval.hpp"
#include "dvae/geometry.hpp"
#include "dvae/network.hpp"
#include "dvae/training.hpp"

namespace dvae::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

/// Writes to `path`, or to `out` when path is empty.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

std::string metrics_csv(const std::vector<training::EpochReport>& history) {
  std::string s = "epoch,objective,kl,reconstruction,C\n";
  for (const auto& r : history) {
    s += std::to_string(r.epoch) + ',' + fmt(r.objective) + ',' + fmt(r.kl) + ',' +
         fmt(r.reconstruction) + ',' + fmt(r.capacity) + '\n';
  }
  return s;
}

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("invalid vector component '" + item + "'");
    }
  }
  return v;
}

std::string latent_decode_csv(const std::vector<geometry::UnitVector>& latents,
                              const std::vector<std::vector<double>>& decodes) {
  std::ostringstream out;
  const std::size_t k = latents.empty() ? 0 : latents.front().ambient_dim();
  const std::size_t n = decodes.empty() ? 0 : decodes.front().size();
  out << "index";
  for (std::size_t j = 0; j < k; ++j) out << ",z" << j;
  for (std::size_t j = 0; j < n; ++j) out << ",x" << j;
  out << '\n';
  for (std::size_t i = 0; i < latents.size(); ++i) {
    out << i;
    for (double v : latents[i].coords()) out << ',' << fmt(v);
    for (double v : decodes[i]) out << ',' << fmt(v);
    out << '\n';
  }
  return out.str();
}

struct TrainArgs {
  std::string config;
  std::string out;
  std::string resume;
  std::string dataset;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::system_clock::now();
  training::TrainConfig config = training::load_config(a.config);
  if (!a.dataset.empty()) {
    config.dataset = a.dataset;
    config.validate();
  }
  const data::LabeledDataset dataset = data::make_dataset(data::DatasetSpec::parse(config.dataset));

  training::TrainState state;
  if (!a.resume.empty()) {
    training::Checkpoint ck = training::load_checkpoint(a.resume);
    if (!(ck.config == config)) {
      throw ConfigError("config does not match the checkpoint being resumed");
    }
    if (ck.state.input_dim != dataset.dim()) {
      throw ConfigError("dataset dimension does not match the checkpoint");
    }
    state = std::move(ck.state);
  } else {
    state = training::initialize_training(config, dataset.dim());
  }

  const fs::path out_dir(a.out);
  const fs::path metrics_path = out_dir / "metrics.csv";
  std::vector<std::string> checkpoints;
  training::TrainOptions options;
  options.threads = threads_from_env();

  write_text(metrics_path, metrics_csv(state.history));
  training::train(state, dataset, config, options,
                  [&](const training::TrainState& s, const training::EpochReport& r) {
                    write_text(metrics_path, metrics_csv(s.history));
                    if (s.epoch % config.checkpoint_every == 0) {
                      std::ostringstream name;
                      name << "epoch_" << std::setw(4) << std::setfill('0') << s.epoch;
                      const fs::path dir = out_dir / "checkpoints" / name.str();
                      training::save_checkpoint(dir, config, s);
                      checkpoints.push_back(dir.string());
                    }
                    out << "epoch " << r.epoch << " objective " << fmt(r.objective) << " kl "
                        << fmt(r.kl) << " reconstruction " << fmt(r.reconstruction) << " C "
                        << fmt(r.capacity) << '\n';
                  });
  const fs::path final_dir = out_dir / "checkpoints" / "final";
  training::save_checkpoint(final_dir, config, state);

  const auto finished = std::chrono::system_clock::now();
  const json manifest{
      {"config", training::to_json(config)},
      {"dataset", data::DatasetSpec::parse(config.dataset).to_string()},
      {"resumed_from", a.resume.empty() ? json(nullptr) : json(a.resume)},
      {"artifacts",
       {{"metrics_csv", metrics_path.string()},
        {"checkpoints", checkpoints},
        {"final_checkpoint", final_dir.string()}}},
      {"threads", options.threads},
      {"wall_clock",
       {{"started", utc_timestamp(started)},
        {"finished", utc_timestamp(finished)},
        {"seconds", std::chrono::duration<double>(finished - started).count()}}}};
  write_text(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
  err << "wrote " << final_dir.string() << '\n';
  return kOk;
}

data::LabeledDataset dataset_for(const training::Checkpoint& ck, const std::string& spec) {
  const std::string text = spec.empty() ? ck.config.dataset : spec;
  data::LabeledDataset d = data::make_dataset(data::DatasetSpec::parse(text));
  if (d.dim() != ck.state.input_dim) {
    throw ConfigError("dataset dimension " + std::to_string(d.dim()) +
                      " does not match model input " + std::to_string(ck.state.input_dim));
  }
  return d;
}

struct EvalArgs {
  std::string checkpoint;
  std::string dataset;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const training::Checkpoint ck = training::load_checkpoint(a.checkpoint);
  const data::LabeledDataset d = dataset_for(ck, a.dataset);
  const auto ev = eval::evaluate_model(ck.config.network_shape(ck.state.input_dim), ck.state.params,
                                       ck.config.walk_length, ck.config.step_mode, d, a.seed);
  const json summary{{"reconstruction_loglik_mean", ev.reconstruction_loglik_mean},
                     {"kl_mean", ev.kl_mean},
                     {"circular_correlation", ev.recovery.circular_correlation},
                     {"explained_variance_top2", ev.recovery.explained_variance_top2}};
  out << summary.dump() << '\n';
  if (!a.out.empty()) {
    std::string csv = "factor,circular_correlation,explained_variance_top2,degenerate_cloud\n";
    for (const auto& f : ev.recovery.per_factor) {
      csv += f.name + ',' + fmt(f.circular_correlation) + ',' +
             fmt(ev.recovery.explained_variance_top2) + ',' +
             (ev.recovery.degenerate_cloud ? "1" : "0") + '\n';
    }
    write_text(a.out, csv);
  }
  return kOk;
}

struct SampleArgs {
  std::string checkpoint;
  std::size_t count = 1;
  std::string from = "prior";
  std::uint64_t seed = 0;
  std::optional<double> t;
  std::string dataset;
  std::string out;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
  const training::Checkpoint ck = training::load_checkpoint(a.checkpoint);
  const auto shape = ck.config.network_shape(ck.state.input_dim);
  model::Decoder decoder(shape, ck.state.params);
  Rng rng = Rng(a.seed).split(streams::kSample);

  std::vector<geometry::UnitVector> latents;
  if (a.from == "prior") {
    for (std::size_t i = 0; i < a.count; ++i) latents.push_back(geometry::uniform_sample(shape.sphere_dim, rng));
  } else if (a.from.starts_with("posterior:")) {
    std::size_t index = 0;
    const std::string idx = a.from.substr(10);
    const auto res = std::from_chars(idx.data(), idx.data() + idx.size(), index);
    if (res.ec != std::errc() || res.ptr != idx.data() + idx.size()) {
      throw ConfigError("invalid posterior index '" + idx + "'");
    }
    const data::LabeledDataset d = dataset_for(ck, a.dataset);
    if (index >= d.size()) throw ConfigError("posterior index out of range");
    model::Encoder encoder(shape, ck.state.params);
    model::PosteriorParams post = encoder(d.observation(index));
    if (a.t) post = model::PosteriorParams(post.mu, *a.t);
    for (std::size_t i = 0; i < a.count; ++i) {
      latents.push_back(
          model::sample_posterior(post, ck.config.walk_length, ck.config.step_mode, rng).sample());
    }
  } else {
    throw ConfigError("--from must be 'prior' or 'posterior:INDEX'");
  }
  std::vector<std::vector<double>> decodes;
  for (const auto& z : latents) decodes.push_back(decoder(z));
  emit(a.out, latent_decode_csv(latents, decodes), out);
  return kOk;
}

struct TraverseArgs {
  std::string checkpoint;
  std::size_t steps = 16;
  std::string center;
  std::string direction;
  std::string out;
};

int cmd_traverse(const TraverseArgs& a, std::ostream& out) {
  const training::Checkpoint ck = training::load_checkpoint(a.checkpoint);
  const auto shape = ck.config.network_shape(ck.state.input_dim);
  const geometry::UnitVector center =
      a.center.empty() ? geometry::UnitVector::basis(shape.sphere_dim, 0)
                       : geometry::project(parse_vector(a.center));
  std::vector<double> direction = a.direction.empty()
                                      ? geometry::UnitVector::basis(shape.sphere_dim, 1).vector()
                                      : parse_vector(a.direction);
  if (center.ambient_dim() != shape.latent_dim() || direction.size() != shape.latent_dim()) {
    throw ConfigError("center and direction need " + std::to_string(shape.latent_dim()) +
                      " components");
  }
  model::Decoder decoder(shape, ck.state.params);
  const auto report = eval::traverse([&](const geometry::UnitVector& z) { return decoder(z); },
                                     center, direction, a.steps);
  emit(a.out, report.to_csv(), out);
  return kOk;
}

}  // namespace

std::size_t threads_from_env() {
  const char* v = std::getenv("DVAE_THREADS");
  if (!v || !*v) return 1;
  std::size_t n = 0;
  const auto res = std::from_chars(v, v + std::strlen(v), n);
  if (res.ec != std::errc() || n == 0) return 1;
  return n;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diffusion VAE with a hyperspherical latent space"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a JSON config");
  train_cmd->add_option("--config", train.config, "Config JSON")->required();
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--resume", train.resume, "Checkpoint directory to resume from");
  train_cmd->add_option("--dataset", train.dataset, "Dataset descriptor (overrides config)");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint directory")->required();
  eval_cmd->add_option("--dataset", ev.dataset, "Dataset descriptor (default: training data)");
  eval_cmd->add_option("--seed", ev.seed, "Seed for posterior walks");
  eval_cmd->add_option("--out", ev.out, "Per-factor score CSV");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Draw latent samples and their decodes");
  sample_cmd->add_option("--checkpoint", sample.checkpoint, "Checkpoint directory")->required();
  sample_cmd->add_option("--count", sample.count, "Number of samples")->required();
  sample_cmd->add_option("--from", sample.from, "prior or posterior:INDEX");
  sample_cmd->add_option("--seed", sample.seed, "Sampling seed");
  sample_cmd->add_option("--t", sample.t, "Override the encoded diffusion time");
  sample_cmd->add_option("--dataset", sample.dataset, "Dataset for posterior:INDEX");
  sample_cmd->add_option("--out", sample.out, "Output CSV (default stdout)");

  TraverseArgs trav;
  auto* trav_cmd = app.add_subcommand("traverse", "Decode a great-circle sweep of the latent sphere");
  trav_cmd->add_option("--checkpoint", trav.checkpoint, "Checkpoint directory")->required();
  trav_cmd->add_option("--steps", trav.steps, "Points on the circle")->required();
  trav_cmd->add_option("--center", trav.center, "Comma-separated start point (default e0)");
  trav_cmd->add_option("--direction", trav.direction, "Comma-separated direction (default e1)");
  trav_cmd->add_option("--out", trav.out, "Output CSV (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalidConfig;
  }

  try {
    if (*train_cmd) return cmd_train(train, out, err);
    if (*eval_cmd) return cmd_eval(ev, out);
    if (*sample_cmd) return cmd_sample(sample, out);
    if (*trav_cmd) return cmd_traverse(trav, out);
  } catch (const NonFiniteValue& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const DegenerateDirection& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const DegenerateVector& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIoFailure;
  }
  return kInvalidConfig;
}

}  // namespace dvae::cli
