#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "setn/core/errors.hpp"
#include "setn/model/setn_model.hpp"
#include "setn/train/config.hpp"

namespace setn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of every parameter value, for cheap before/after comparisons.
inline std::uint64_t parameter_hash(const SetnModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : model.parameters()) {
    const auto d = t.data();
    h = fnv1a({reinterpret_cast<const char*>(d.data()), d.size() * sizeof(double)}, h);
  }
  return h;
}

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size},
          {"hidden_dim", c.hidden_dim},
          {"encoder_blocks", c.encoder_blocks},
          {"ff_dim", c.ff_dim},
          {"max_tokens", c.max_tokens},
          {"num_sectors", c.num_sectors},
          {"num_industries", c.num_industries},
          {"gnn", to_string(c.gnn)},
          {"residual", c.residual},
          {"dropout", c.dropout},
          {"pooling", to_string(c.pooling)},
          {"encoder_train", to_string(c.encoder_policy)}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.encoder_blocks = j.at("encoder_blocks").get<std::size_t>();
  c.ff_dim = j.at("ff_dim").get<std::size_t>();
  c.max_tokens = j.at("max_tokens").get<std::size_t>();
  c.num_sectors = j.at("num_sectors").get<std::size_t>();
  c.num_industries = j.at("num_industries").get<std::size_t>();
  c.gnn = parse_gnn(j.at("gnn").get<std::string>());
  c.residual = j.at("residual").get<bool>();
  c.dropout = j.at("dropout").get<double>();
  c.pooling = parse_pooling(j.at("pooling").get<std::string>());
  c.encoder_policy = parse_policy(j.at("encoder_train").get<std::string>());
  return c;
}

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::string_view s) { bytes_.append(s); }
  const std::string& bytes() const { return bytes_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint: truncated payload");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// A model plus the training settings it was fitted with (seed, split,
/// graph direction), so evaluation can reproduce the same test split.
struct Checkpoint {
  SetnModel model;
  TrainConfig training;
};

/// Layout, all integers little-endian:
///   "SETN" | u32 version | u64 n + n bytes of config JSON
///   ({"model": {...}, "training": {...}}) |
///   u64 tensor count | per tensor: u32 rank, u64 dims..., f64 values... |
///   u64 FNV-1a of everything before it
inline std::string serialize_model(const SetnModel& model,
                                   const TrainConfig& training = {}) {
  detail::ByteWriter w;
  w.raw("SETN");
  w.u32(kCheckpointVersion);
  const std::string config =
      nlohmann::json{{"model", to_json(model.config)}, {"training", to_json(training)}}
          .dump();
  w.u64(config.size());
  w.raw(config);
  const auto params = model.parameters();
  w.u64(params.size());
  for (const auto& t : params) {
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u64(d);
    for (double v : t.data()) w.f64(v);
  }
  std::string bytes = w.bytes();
  detail::ByteWriter tail;
  tail.u64(fnv1a(bytes));
  return bytes + tail.bytes();
}

/// Rebuilds a model from serialize_model output. Throws FormatError on a bad
/// magic, version, checksum or layout; nothing is returned on failure.
inline Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 + 4 + 8 + 8 + 8 || bytes.substr(0, 4) != "SETN") {
    throw FormatError("checkpoint: not a model file (bad magic or too short)");
  }
  detail::ByteReader tail(bytes.substr(bytes.size() - 8));
  if (tail.u64() != fnv1a(bytes.substr(0, bytes.size() - 8))) {
    throw FormatError("checkpoint: checksum mismatch (corrupt or truncated file)");
  }
  detail::ByteReader r(bytes.substr(0, bytes.size() - 8));
  r.raw(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: version " + std::to_string(version) +
                      " unsupported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  ModelConfig cfg;
  TrainConfig training;
  try {
    const auto j = nlohmann::json::parse(r.raw(r.u64()));
    cfg = model_config_from_json(j.at("model"));
    training = train_config_from_json(j.at("training"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad config: ") + e.what());
  } catch (const ParameterError& e) {
    throw FormatError(std::string("checkpoint: bad config: ") + e.what());
  }
  SetnModel model = SetnModel::init(cfg, 0);
  auto params = model.parameters();
  const std::uint64_t count = r.u64();
  if (count != params.size()) {
    throw FormatError("checkpoint: " + std::to_string(count) +
                      " tensors, model needs " + std::to_string(params.size()));
  }
  for (auto& t : params) {
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    if (shape != t.shape()) {
      throw FormatError("checkpoint: tensor " + shape_string(shape) +
                        " where " + shape_string(t.shape()) + " is expected");
    }
    for (double& v : t.mutable_data()) v = r.f64();
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  return {std::move(model), training};
}

inline SetnModel deserialize_model(std::string_view bytes) {
  return deserialize_checkpoint(bytes).model;
}

inline void save_model(const SetnModel& model, const std::string& path,
                       const TrainConfig& training = {}) {
  const std::string bytes = serialize_model(model, training);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path);
}

/// Loads a checkpoint; with `expected` set, a different GNN kind throws
/// KindMismatchError.
inline Checkpoint load_checkpoint(const std::string& path,
                                  std::optional<GnnKind> expected = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  const std::string bytes{std::istreambuf_iterator<char>(in), {}};
  Checkpoint ck = deserialize_checkpoint(bytes);
  if (expected && *expected != ck.model.config.gnn) {
    throw KindMismatchError("checkpoint " + path + " holds a " +
                            to_string(ck.model.config.gnn) + " model, " +
                            to_string(*expected) + " was requested");
  }
  return ck;
}

inline SetnModel load_model(const std::string& path,
                            std::optional<GnnKind> expected = std::nullopt) {
  return load_checkpoint(path, expected).model;
}

}  // namespace setn
