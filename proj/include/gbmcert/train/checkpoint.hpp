#pragma once

// Binary checkpoints:
//   "GBMCKPT1"  u32 version  u64 n + n bytes of JSON metadata
//   u64 tensor count, then per tensor:
//     u32 name length + name, u32 rank, u64 dims[rank], doubles
// Integers and doubles are little-endian.  The metadata holds the model
// shape and the calibrated LSTM domains.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gbmcert/core/error.hpp"
#include "gbmcert/models/model.hpp"

namespace gbmcert {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'G', 'B', 'M', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline nlohmann::json to_json(const ModelShape& s) {
  return {{"kind", to_string(s.kind)},
          {"input_size", s.input_size},
          {"num_classes", s.num_classes},
          {"hidden_size", s.hidden_size},
          {"state_per_channel", s.state_per_channel},
          {"kernel_sizes", s.kernel_sizes},
          {"filters", s.filters},
          {"activation", s.activation == ConvActivation::Relu ? "relu" : "tanh"},
          {"gbm_words", s.gbm_words}};
}

inline ModelShape shape_from_json(const nlohmann::json& j) {
  ModelShape s;
  s.kind = model_kind_from_string(j.at("kind").get<std::string>());
  s.input_size = j.at("input_size").get<std::size_t>();
  s.num_classes = j.at("num_classes").get<std::size_t>();
  s.hidden_size = j.at("hidden_size").get<std::size_t>();
  s.state_per_channel = j.at("state_per_channel").get<std::size_t>();
  s.kernel_sizes = j.at("kernel_sizes").get<std::vector<std::size_t>>();
  s.filters = j.at("filters").get<std::size_t>();
  s.activation = j.at("activation").get<std::string>() == "tanh" ? ConvActivation::Tanh
                                                                 : ConvActivation::Relu;
  s.gbm_words = j.at("gbm_words").get<std::size_t>();
  s.validate();
  return s;
}

inline nlohmann::json to_json(const BoxInterval& b) {
  return {{"lo", b.lo().values()}, {"hi", b.hi().values()}};
}

inline BoxInterval box_from_json(const nlohmann::json& j) {
  return {Vector(j.at("lo").get<std::vector<double>>()),
          Vector(j.at("hi").get<std::vector<double>>())};
}

inline nlohmann::json to_json(const LstmDomain<double>& d) {
  return {{"v", to_json(d.v_box)}, {"h", to_json(d.h_box)}, {"c", to_json(d.c_box)}};
}

inline LstmDomain<double> domain_from_json(const nlohmann::json& j) {
  return {box_from_json(j.at("v")), box_from_json(j.at("h")), box_from_json(j.at("c"))};
}

namespace detail {

template <class U>
void write_pod(std::ostream& out, U x) {
  out.write(reinterpret_cast<const char*>(&x), sizeof x);
}

template <class U>
U read_pod(std::istream& in) {
  U x{};
  in.read(reinterpret_cast<char*>(&x), sizeof x);
  if (!in) fail(ErrorKind::Data, "checkpoint: truncated file");
  return x;
}

inline std::string read_bytes(std::istream& in, std::uint64_t n) {
  if (n > (std::uint64_t{1} << 32)) fail(ErrorKind::Data, "checkpoint: implausible length");
  std::string s(static_cast<std::size_t>(n), '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) fail(ErrorKind::Data, "checkpoint: truncated file");
  return s;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& out, const Model<double>& m,
                            const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json meta = {{"shape", to_json(m.shape)}, {"extra", extra}};
  if (m.fwd_domain) meta["fwd_domain"] = to_json(*m.fwd_domain);
  if (m.bwd_domain) meta["bwd_domain"] = to_json(*m.bwd_domain);
  const std::string meta_s = meta.dump();
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::write_pod(out, kCheckpointVersion);
  detail::write_pod(out, static_cast<std::uint64_t>(meta_s.size()));
  out.write(meta_s.data(), static_cast<std::streamsize>(meta_s.size()));

  Model<double> copy = m;
  std::uint64_t count = 0;
  copy.visit([&](const std::string&, std::span<double>, ParamGroup) { ++count; });
  detail::write_pod(out, count);
  copy.visit([&](const std::string& name, std::span<double> s, ParamGroup) {
    detail::write_pod(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_pod(out, std::uint32_t{1});
    detail::write_pod(out, static_cast<std::uint64_t>(s.size()));
    out.write(reinterpret_cast<const char*>(s.data()),
              static_cast<std::streamsize>(s.size() * sizeof(double)));
  });
  if (!out) fail(ErrorKind::Data, "checkpoint: write failed");
}

inline void save_checkpoint(const std::string& path, const Model<double>& m,
                            const nlohmann::json& extra = nlohmann::json::object()) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Data, "cannot write checkpoint '" + path + "'");
  save_checkpoint(out, m, extra);
}

struct LoadedCheckpoint {
  Model<double> model;
  nlohmann::json extra;
};

inline LoadedCheckpoint load_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    fail(ErrorKind::Data, "checkpoint: bad magic");
  const auto version = detail::read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    fail(ErrorKind::Data, "checkpoint: unsupported version " + std::to_string(version));
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(detail::read_bytes(in, detail::read_pod<std::uint64_t>(in)));
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::Data, std::string("checkpoint metadata: ") + ex.what());
  }
  LoadedCheckpoint out;
  try {
    out.model = Model<double>::zeros(shape_from_json(meta.at("shape")));
    if (meta.contains("fwd_domain")) out.model.fwd_domain = domain_from_json(meta["fwd_domain"]);
    if (meta.contains("bwd_domain")) out.model.bwd_domain = domain_from_json(meta["bwd_domain"]);
    out.extra = meta.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::Data, std::string("checkpoint metadata: ") + ex.what());
  }

  const auto count = detail::read_pod<std::uint64_t>(in);
  std::uint64_t seen = 0;
  out.model.visit([&](const std::string& name, std::span<double> s, ParamGroup) {
    if (seen++ >= count) fail(ErrorKind::Data, "checkpoint: missing tensor '" + name + "'");
    const std::string stored = detail::read_bytes(in, detail::read_pod<std::uint32_t>(in));
    if (stored != name)
      fail(ErrorKind::Data, "checkpoint: expected tensor '" + name + "', found '" + stored + "'");
    const auto rank = detail::read_pod<std::uint32_t>(in);
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) n *= detail::read_pod<std::uint64_t>(in);
    if (n != s.size())
      fail(ErrorKind::Data, "checkpoint: tensor '" + name + "' has " + std::to_string(n) +
                                " values, expected " + std::to_string(s.size()));
    in.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) fail(ErrorKind::Data, "checkpoint: truncated tensor '" + name + "'");
  });
  if (seen != count) fail(ErrorKind::Data, "checkpoint: unexpected extra tensors");
  return out;
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Data, "cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace gbmcert
