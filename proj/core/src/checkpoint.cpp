// SPDX-License-Identifier: Apache-2.0
#include "dvae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dvae/errors.hpp"

namespace dvae::training {
namespace {

using autodiff::Tensor;
using nlohmann::json;

constexpr const char* kFormat = "dvae-checkpoint";
constexpr int kVersion = 1;

void put_f64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xFFu));
    bits >>= 8;
  }
}

double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

json rng_json(const Rng& r) {
  return json{{"key", r.state().key}, {"stream", r.state().stream},
              {"position", r.state().position}};
}

Rng rng_from(const json& j) {
  return Rng(Rng::State{j.at("key").get<std::uint64_t>(), j.at("stream").get<std::uint64_t>(),
                        j.at("position").get<std::uint64_t>()});
}

struct Role {
  const char* name;
  ParameterSet TrainState::*member;
};
constexpr Role kRoles[] = {{"parameter", &TrainState::params},
                           {"adam_first_moment", &TrainState::first_moment},
                           {"adam_second_moment", &TrainState::second_moment}};

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const TrainConfig& config,
                     const TrainState& state) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::string weights;
  json index = json::array();
  for (const Role& role : kRoles) {
    const ParameterSet& set = state.*role.member;
    for (std::size_t i = 0; i < set.size(); ++i) {
      index.push_back({{"name", set.name(i)},
                       {"role", role.name},
                       {"shape", set[i].shape()},
                       {"offset", weights.size()}});
      for (double v : set[i].data()) put_f64(weights, v);
    }
  }

  json history = json::array();
  for (const EpochReport& r : state.history) {
    history.push_back({{"epoch", r.epoch},
                       {"objective", r.objective},
                       {"kl", r.kl},
                       {"reconstruction", r.reconstruction},
                       {"capacity", r.capacity}});
  }

  const json manifest{{"format", kFormat},
                      {"version", kVersion},
                      {"config", to_json(config)},
                      {"input_dim", state.input_dim},
                      {"epoch", state.epoch},
                      {"optimizer_steps", state.optimizer_steps},
                      {"rng", {{"shuffle", rng_json(state.shuffle_rng)},
                               {"walk", rng_json(state.walk_rng)}}},
                      {"history", history},
                      {"weights_bytes", weights.size()},
                      {"tensors", index}};

  write_file(dir / kWeightsFile, weights);
  write_file(dir / kManifestFile, manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("checkpoint directory not found: " + dir.string());
  }
  const std::string manifest_text = read_file(dir / kManifestFile);
  const std::string weights = read_file(dir / kWeightsFile);

  try {
    const json m = json::parse(manifest_text);
    if (m.at("format") != kFormat || m.at("version") != kVersion) {
      throw ParseError("unsupported checkpoint format", 0);
    }
    if (m.at("weights_bytes").get<std::size_t>() != weights.size()) {
      throw ParseError("weights.bin size does not match manifest", 0);
    }
    Checkpoint ck{config_from_json(m.at("config")), TrainState{}};
    TrainState& s = ck.state;
    s.input_dim = m.at("input_dim").get<std::size_t>();
    s.epoch = m.at("epoch").get<std::size_t>();
    s.optimizer_steps = m.at("optimizer_steps").get<std::uint64_t>();
    s.shuffle_rng = rng_from(m.at("rng").at("shuffle"));
    s.walk_rng = rng_from(m.at("rng").at("walk"));
    for (const json& h : m.at("history")) {
      s.history.push_back({h.at("epoch").get<std::size_t>(), h.at("objective").get<double>(),
                           h.at("kl").get<double>(), h.at("reconstruction").get<double>(),
                           h.at("capacity").get<double>()});
    }
    const auto* bytes = reinterpret_cast<const unsigned char*>(weights.data());
    for (const json& t : m.at("tensors")) {
      const std::string role = t.at("role").get<std::string>();
      ParameterSet* target = nullptr;
      for (const Role& r : kRoles) {
        if (role == r.name) target = &(s.*r.member);
      }
      if (!target) throw ParseError("unknown tensor role '" + role + "'", 0);
      Tensor tensor(t.at("shape").get<autodiff::Shape>());
      const std::size_t offset = t.at("offset").get<std::size_t>();
      if (offset + tensor.size() * 8 > weights.size()) {
        throw ParseError("tensor '" + t.at("name").get<std::string>() + "' overruns weights.bin", 0);
      }
      for (std::size_t j = 0; j < tensor.size(); ++j) tensor[j] = get_f64(bytes + offset + 8 * j);
      target->add(t.at("name").get<std::string>(), std::move(tensor));
    }
    if (s.first_moment.names() != s.params.names() ||
        s.second_moment.names() != s.params.names()) {
      throw ParseError("optimizer moments do not match parameters", 0);
    }
    for (std::size_t i = 0; i < s.params.size(); ++i) {
      if (s.first_moment[i].shape() != s.params[i].shape() ||
          s.second_moment[i].shape() != s.params[i].shape()) {
        throw ParseError("moment shape mismatch for '" + s.params.name(i) + "'", 0);
      }
    }
    return ck;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what(), 0);
  }
}

}  // namespace dvae::training
