// SPDX-License-Identifier: Apache-2.0
#include "dvae/config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>

#include "dvae/data.hpp"
#include "dvae/errors.hpp"

namespace dvae::training {
namespace {

using nlohmann::json;

const std::set<std::string, std::less<>> kKeys = {
    "d",          "beta",          "walk_length",    "C_min",          "C_max",
    "epochs",     "anneal_epochs", "batch_size",     "learning_rate",  "seed",
    "step_mode",  "encoder_hidden", "decoder_hidden", "checkpoint_every", "dataset"};

bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    const json& v = j.at(key);
    if constexpr (std::is_unsigned_v<T>) {
      if (!is_count(v)) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      if (!v.is_array()) throw ConfigError("");
      for (const json& e : v) {
        if (!is_count(e)) throw ConfigError("");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    }
    return j.at(key).get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + std::string(key) + "' has the wrong type");
  }
}

}  // namespace

void TrainConfig::validate() const {
  const auto fail = [](const std::string& m) { throw ConfigError("invalid config: " + m); };
  if (d < 1) fail("d must be >= 1");
  if (!(beta > 0.0) || !std::isfinite(beta)) fail("beta must be positive");
  if (walk_length < 1) fail("walk_length must be >= 1");
  if (!(C_min >= 0.0)) fail("C_min must be >= 0");
  if (!std::isfinite(C_max)) fail("C_max must be finite");
  if (!(C_min <= C_max)) fail("C_min must not exceed C_max");
  if (epochs < 1) fail("epochs must be >= 1");
  if (anneal_epochs < 1 || anneal_epochs > epochs) fail("anneal_epochs must be in [1, epochs]");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    fail("learning_rate must be finite and >= 0");
  }
  if (checkpoint_every < 1) fail("checkpoint_every must be >= 1");
  for (std::size_t w : encoder_hidden) {
    if (w == 0) fail("encoder widths must be positive");
  }
  for (std::size_t w : decoder_hidden) {
    if (w == 0) fail("decoder widths must be positive");
  }
  data::DatasetSpec::parse(dataset);
}

model::NetworkShape TrainConfig::network_shape(std::size_t input_dim) const {
  return model::NetworkShape{input_dim, d, encoder_hidden, decoder_hidden};
}

model::ObjectiveSettings TrainConfig::objective_settings() const {
  return model::ObjectiveSettings{beta, walk_length, step_mode};
}

nlohmann::json to_json(const TrainConfig& c) {
  return json{{"d", c.d},
              {"beta", c.beta},
              {"walk_length", c.walk_length},
              {"C_min", c.C_min},
              {"C_max", c.C_max},
              {"epochs", c.epochs},
              {"anneal_epochs", c.anneal_epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"seed", c.seed},
              {"step_mode", std::string(model::to_string(c.step_mode))},
              {"encoder_hidden", c.encoder_hidden},
              {"decoder_hidden", c.decoder_hidden},
              {"checkpoint_every", c.checkpoint_every},
              {"dataset", c.dataset}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  TrainConfig c;
  if (j.contains("d")) c.d = get<std::size_t>(j, "d");
  if (j.contains("beta")) c.beta = get<double>(j, "beta");
  if (j.contains("walk_length")) c.walk_length = get<std::size_t>(j, "walk_length");
  if (j.contains("C_min")) c.C_min = get<double>(j, "C_min");
  if (j.contains("C_max")) c.C_max = get<double>(j, "C_max");
  if (j.contains("epochs")) c.epochs = get<std::size_t>(j, "epochs");
  c.anneal_epochs = j.contains("anneal_epochs") ? get<std::size_t>(j, "anneal_epochs") : c.epochs;
  if (j.contains("batch_size")) c.batch_size = get<std::size_t>(j, "batch_size");
  if (j.contains("learning_rate")) c.learning_rate = get<double>(j, "learning_rate");
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed");
  if (j.contains("step_mode")) {
    try {
      c.step_mode = model::step_mode_from_string(get<std::string>(j, "step_mode"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("encoder_hidden")) c.encoder_hidden = get<std::vector<std::size_t>>(j, "encoder_hidden");
  if (j.contains("decoder_hidden")) c.decoder_hidden = get<std::vector<std::size_t>>(j, "decoder_hidden");
  if (j.contains("checkpoint_every")) c.checkpoint_every = get<std::size_t>(j, "checkpoint_every");
  if (j.contains("dataset")) c.dataset = get<std::string>(j, "dataset");
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

}  // namespace dvae::training
