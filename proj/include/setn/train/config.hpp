#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "setn/core/errors.hpp"
#include "setn/model/setn_model.hpp"

namespace setn {

inline std::string to_string(GnnKind k) {
  switch (k) {
    case GnnKind::kGcn: return "gcn";
    case GnnKind::kGat: return "gat";
    case GnnKind::kNone: return "none";
  }
  return "?";
}

inline std::string to_string(Pooling p) {
  switch (p) {
    case Pooling::kCls: return "cls";
    case Pooling::kMean: return "mean";
    case Pooling::kMax: return "max";
  }
  return "?";
}

inline std::string to_string(EncoderPolicy p) {
  switch (p) {
    case EncoderPolicy::kAll: return "all";
    case EncoderPolicy::kLastBlockOnly: return "last";
    case EncoderPolicy::kNone: return "none";
  }
  return "?";
}

inline GnnKind parse_gnn(const std::string& s) {
  if (s == "gcn") return GnnKind::kGcn;
  if (s == "gat") return GnnKind::kGat;
  if (s == "none") return GnnKind::kNone;
  throw ParameterError("unknown gnn '" + s + "' (expected gcn, gat or none)");
}

inline Pooling parse_pooling(const std::string& s) {
  if (s == "cls") return Pooling::kCls;
  if (s == "mean") return Pooling::kMean;
  if (s == "max") return Pooling::kMax;
  throw ParameterError("unknown pooling '" + s + "' (expected cls, mean or max)");
}

inline EncoderPolicy parse_policy(const std::string& s) {
  if (s == "all") return EncoderPolicy::kAll;
  if (s == "last" || s == "last_block_only") return EncoderPolicy::kLastBlockOnly;
  if (s == "none") return EncoderPolicy::kNone;
  throw ParameterError("unknown encoder policy '" + s +
                       "' (expected all, last or none)");
}

/// Training hyperparameters. Defaults: 20 epochs, Adam at lr 0.001,
/// dropout 0.2, mean pooling, 1-hop subgraphs, 512-token truncation and a
/// loss on the target stock only.
struct TrainConfig {
  std::size_t epochs = 20;
  double learning_rate = 0.001;
  double dropout = 0.2;
  Pooling pooling = Pooling::kMean;
  GnnKind gnn = GnnKind::kGcn;
  bool residual = true;
  bool directed = true;
  bool in_neighbors = true;  // false: aggregate over out-neighbors instead
  EncoderPolicy encoder_policy = EncoderPolicy::kLastBlockOnly;
  std::size_t hidden_dim = 64;
  std::size_t encoder_blocks = 2;
  std::size_t ff_dim = 128;
  std::size_t max_tokens = kMaxTokens;
  std::size_t sampling_hops = 1;
  std::string loss_scope = "target_only";
  std::array<double, 3> split = {0.7, 0.1, 0.2};
  std::vector<std::size_t> ks = {5, 10, 50};
  std::size_t min_theme_size = 16;  // "more than 15" members
  bool theme_include_self = false;
  std::uint64_t seed = 0;

  bool operator==(const TrainConfig&) const = default;

  void validate() const {
    if (epochs == 0) throw ParameterError("epochs must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw ParameterError("learning_rate must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
      throw ParameterError("dropout must lie in [0, 1)");
    }
    if (hidden_dim == 0 || ff_dim == 0) throw ParameterError("dimensions must be positive");
    if (max_tokens < 2 || max_tokens > kMaxTokens) {
      throw ParameterError("max_tokens must lie in [2, 512]");
    }
    if (sampling_hops != 1) throw ParameterError("only 1-hop sampling is supported");
    if (loss_scope != "target_only") {
      throw ParameterError("only the target_only loss scope is supported");
    }
    if (ks.empty()) throw ParameterError("k list must not be empty");
    for (auto k : ks) {
      if (k == 0) throw ParameterError("every k must be >= 1");
    }
  }

  ModelConfig model_config(std::size_t vocab_size, std::size_t num_sectors,
                           std::size_t num_industries) const {
    ModelConfig m;
    m.vocab_size = vocab_size;
    m.hidden_dim = hidden_dim;
    m.encoder_blocks = encoder_blocks;
    m.ff_dim = ff_dim;
    m.max_tokens = max_tokens;
    m.num_sectors = num_sectors;
    m.num_industries = num_industries;
    m.gnn = gnn;
    m.residual = residual;
    m.dropout = dropout;
    m.pooling = pooling;
    m.encoder_policy = encoder_policy;
    return m;
  }
};

/// Input and output locations of a CLI run.
struct DataPaths {
  std::string nodes;
  std::string edges;
  std::string themes;
  std::string vocab;
  std::string taxonomy;  // empty: built-in TOPIX table
  std::string out;
  std::string model;

  bool operator==(const DataPaths&) const = default;
};

struct RunConfig {
  TrainConfig train;
  DataPaths paths;
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"epochs", c.epochs},
      {"learning_rate", c.learning_rate},
      {"dropout", c.dropout},
      {"pooling", to_string(c.pooling)},
      {"gnn", to_string(c.gnn)},
      {"residual", c.residual},
      {"graph", c.directed ? "directed" : "undirected"},
      {"neighbors", c.in_neighbors ? "in" : "out"},
      {"encoder_train", to_string(c.encoder_policy)},
      {"hidden_dim", c.hidden_dim},
      {"encoder_blocks", c.encoder_blocks},
      {"ff_dim", c.ff_dim},
      {"max_tokens", c.max_tokens},
      {"sampling_hops", c.sampling_hops},
      {"loss_scope", c.loss_scope},
      {"split", c.split},
      {"k", c.ks},
      {"min_theme_size", c.min_theme_size},
      {"theme_include_self", c.theme_include_self},
      {"seed", c.seed},
  };
}

inline nlohmann::json to_json(const RunConfig& rc) {
  nlohmann::json j = to_json(rc.train);
  j["nodes"] = rc.paths.nodes;
  j["edges"] = rc.paths.edges;
  j["themes"] = rc.paths.themes;
  j["vocab"] = rc.paths.vocab;
  j["taxonomy"] = rc.paths.taxonomy;
  j["out"] = rc.paths.out;
  j["model"] = rc.paths.model;
  return j;
}

/// Overlays the keys of `j` onto `base`. Unknown keys and wrongly typed
/// values throw ParameterError.
inline RunConfig apply_json(RunConfig base, const nlohmann::json& j) {
  if (!j.is_object()) throw ParameterError("config: expected a JSON object");
  auto& c = base.train;
  auto& p = base.paths;
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "dropout") c.dropout = v.get<double>();
      else if (key == "pooling") c.pooling = parse_pooling(v.get<std::string>());
      else if (key == "gnn") c.gnn = parse_gnn(v.get<std::string>());
      else if (key == "residual") c.residual = v.get<bool>();
      else if (key == "graph") {
        const auto s = v.get<std::string>();
        if (s != "directed" && s != "undirected") {
          throw ParameterError("config: graph must be directed or undirected");
        }
        c.directed = s == "directed";
      }
      else if (key == "neighbors") {
        const auto s = v.get<std::string>();
        if (s != "in" && s != "out") {
          throw ParameterError("config: neighbors must be in or out");
        }
        c.in_neighbors = s == "in";
      }
      else if (key == "encoder_train") c.encoder_policy = parse_policy(v.get<std::string>());
      else if (key == "hidden_dim") c.hidden_dim = v.get<std::size_t>();
      else if (key == "encoder_blocks") c.encoder_blocks = v.get<std::size_t>();
      else if (key == "ff_dim") c.ff_dim = v.get<std::size_t>();
      else if (key == "max_tokens") c.max_tokens = v.get<std::size_t>();
      else if (key == "sampling_hops") c.sampling_hops = v.get<std::size_t>();
      else if (key == "loss_scope") c.loss_scope = v.get<std::string>();
      else if (key == "split") c.split = v.get<std::array<double, 3>>();
      else if (key == "k") c.ks = v.get<std::vector<std::size_t>>();
      else if (key == "min_theme_size") c.min_theme_size = v.get<std::size_t>();
      else if (key == "theme_include_self") c.theme_include_self = v.get<bool>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "nodes") p.nodes = v.get<std::string>();
      else if (key == "edges") p.edges = v.get<std::string>();
      else if (key == "themes") p.themes = v.get<std::string>();
      else if (key == "vocab") p.vocab = v.get<std::string>();
      else if (key == "taxonomy") p.taxonomy = v.get<std::string>();
      else if (key == "out") p.out = v.get<std::string>();
      else if (key == "model") p.model = v.get<std::string>();
      else throw ParameterError("config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ParameterError("config: bad value for '" + key + "': " + e.what());
    }
  }
  return base;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  return apply_json(RunConfig{}, j).train;
}

}  // namespace setn
