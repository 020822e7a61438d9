// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// Checkpoint layout, all integers little-endian:
//
//   "HNEWSCKP"                      8-byte magic
//   u32  version                    currently 1
//   u64  n, n bytes                 generator config as JSON
//   u64  V, V x (u32 n, n bytes)    vocabulary tokens in id order
//   u64  P, P x tensor              parameters in ModelParams::named() order
//
//   tensor := u32 n, n bytes (name), u32 rank, rank x u64 dims,
//             prod(dims) x f64 (IEEE-754 bits)

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "hashnews/errors.h"
#include "hashnews/generator.h"

namespace hashnews {

namespace {

constexpr char kMagic[8] = {'H', 'N', 'E', 'W', 'S', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw ValidationError("checkpoint: unexpected end of file");
  }
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, std::size_t length) {
  if (length > (std::size_t{1} << 30)) throw ValidationError("checkpoint: string too long");
  std::string s(length, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(length))) {
    throw ValidationError("checkpoint: unexpected end of file");
  }
  return s;
}

nlohmann::ordered_json config_to_json(const GeneratorConfig& c) {
  nlohmann::ordered_json j;
  j["embed_dim"] = c.embed_dim;
  j["hidden"] = c.hidden;
  j["encoder_layers"] = c.encoder_layers;
  j["decoder_layers"] = c.decoder_layers;
  j["merge_layers"] = c.merge_layers;
  j["learning_rate"] = c.learning_rate;
  j["lr_decay"] = c.lr_decay;
  j["batch_size"] = c.batch_size;
  j["dropout"] = c.dropout;
  j["max_gen_len"] = c.max_gen_len;
  j["beam_size"] = c.beam_size;
  j["optimizer"] = to_string(c.optimizer);
  j["mode"] = to_string(c.mode);
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["max_grad_norm"] = c.max_grad_norm;
  j["init_scale"] = c.init_scale;
  j["seed"] = c.seed;
  return j;
}

GeneratorConfig config_from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  try {
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.encoder_layers = j.at("encoder_layers").get<std::size_t>();
    c.decoder_layers = j.at("decoder_layers").get<std::size_t>();
    c.merge_layers = j.at("merge_layers").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.lr_decay = j.at("lr_decay").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.max_gen_len = j.at("max_gen_len").get<std::size_t>();
    c.beam_size = j.at("beam_size").get<std::size_t>();
    c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    c.mode = parse_mode(j.at("mode").get<std::string>());
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.patience = j.at("patience").get<std::size_t>();
    c.max_grad_norm = j.at("max_grad_norm").get<double>();
    c.init_scale = j.at("init_scale").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint: bad config: ") + e.what());
  }
  return c;
}

}  // namespace

void HashtagGenerator::save(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  const std::string cfg = config_to_json(config_).dump();
  put<std::uint64_t>(out, cfg.size());
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  put<std::uint64_t>(out, vocab_.size());
  for (const auto& t : vocab_.tokens()) put_string(out, t);
  const auto named = params_.named();
  put<std::uint64_t>(out, named.size());
  for (const auto& [name, var] : named) {
    put_string(out, name);
    const auto& t = var.value();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t i = 0; i < t.rank(); ++i) put<std::uint64_t>(out, t.dim(i));
    for (const double x : t.data()) put<double>(out, x);
  }
  if (!out) throw Error("checkpoint: write failed");
}

void HashtagGenerator::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  save(out);
}

HashtagGenerator HashtagGenerator::load(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError("checkpoint: bad magic header");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) {
    throw ValidationError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto cfg_len = get<std::uint64_t>(in);
  const std::string cfg_text = get_string(in, cfg_len);
  nlohmann::json cfg_json;
  try {
    cfg_json = nlohmann::json::parse(cfg_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("checkpoint: bad config JSON: ") + e.what());
  }
  const GeneratorConfig config = config_from_json(cfg_json);

  const auto vocab_size = get<std::uint64_t>(in);
  Tokens tokens;
  for (std::uint64_t i = 0; i < vocab_size; ++i) {
    const std::string t = get_string(in, get<std::uint32_t>(in));
    if (i >= static_cast<std::uint64_t>(Vocabulary::kNumReserved)) tokens.push_back(t);
  }
  if (vocab_size < static_cast<std::uint64_t>(Vocabulary::kNumReserved)) {
    throw ValidationError("checkpoint: vocabulary lacks reserved entries");
  }

  HashtagGenerator model(config, Vocabulary(tokens));
  auto named = model.params_.named();
  const auto n_params = get<std::uint64_t>(in);
  if (n_params != named.size()) {
    throw ValidationError("checkpoint: expected " + std::to_string(named.size()) +
                          " tensors, found " + std::to_string(n_params));
  }
  for (auto& [name, var] : named) {
    const std::string stored = get_string(in, get<std::uint32_t>(in));
    if (stored != name) {
      throw ValidationError("checkpoint: expected tensor '" + name + "', found '" + stored + "'");
    }
    auto& t = var.mutable_value();
    const auto rank = get<std::uint32_t>(in);
    bool match = rank == t.rank();
    std::vector<std::uint64_t> dims(rank);
    for (auto& d : dims) d = get<std::uint64_t>(in);
    for (std::size_t i = 0; match && i < rank; ++i) match = dims[i] == t.dim(i);
    if (!match) {
      throw ValidationError("checkpoint: tensor '" + name + "' shape does not match config " +
                            t.shape_string() + " (vocabulary mismatch?)");
    }
    for (auto& x : t.data()) x = get<double>(in);
    if (!t.all_finite()) throw ValidationError("checkpoint: tensor '" + name + "' not finite");
  }
  return model;
}

HashtagGenerator HashtagGenerator::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  return load(in);
}

}  // namespace hashnews
