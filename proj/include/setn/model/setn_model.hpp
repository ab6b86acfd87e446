#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "setn/core/errors.hpp"
#include "setn/graph/layers.hpp"
#include "setn/numerics/ops.hpp"
#include "setn/text/encoder.hpp"

namespace setn {

/// Architecture and regularization settings stored with every checkpoint.
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden_dim = 64;
  std::size_t encoder_blocks = 2;
  std::size_t ff_dim = 128;
  std::size_t max_tokens = kMaxTokens;
  std::size_t num_sectors = 17;
  std::size_t num_industries = 33;
  GnnKind gnn = GnnKind::kGcn;
  bool residual = true;
  double dropout = 0.2;
  Pooling pooling = Pooling::kMean;
  EncoderPolicy encoder_policy = EncoderPolicy::kLastBlockOnly;

  bool operator==(const ModelConfig&) const = default;
};

/// Single affine classifier layer.
struct ClassifierHead {
  Tensor weight;  // [d × C]
  Tensor bias;    // [C]

  template <typename Rng>
  static ClassifierHead init(std::size_t dim, std::size_t classes, Rng& rng) {
    return {init::xavier_uniform(dim, classes, rng), init::zeros({classes})};
  }
};

/// Text encoder + GNN + residual fusion + sector and industry heads.
struct SetnModel {
  ModelConfig config;
  TextEncoderParams encoder;
  GnnParams gnn;
  ClassifierHead sector_head;
  ClassifierHead industry_head;

  static SetnModel init(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.vocab_size <= kReservedIds) {
      throw ParameterError("model: vocab_size must exceed the reserved ids");
    }
    if (cfg.num_sectors == 0 || cfg.num_industries == 0) {
      throw ParameterError("model: class counts must be positive");
    }
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
      throw ParameterError("model: dropout must lie in [0, 1)");
    }
    std::mt19937_64 rng(seed);
    SetnModel m;
    m.config = cfg;
    m.encoder = TextEncoderParams::init(
        {cfg.vocab_size, cfg.hidden_dim, cfg.encoder_blocks, cfg.ff_dim,
         cfg.max_tokens},
        rng);
    set_trainable(m.encoder, cfg.encoder_policy);
    if (cfg.gnn != GnnKind::kNone) {
      m.gnn = GnnParams::init(cfg.hidden_dim, cfg.gnn, rng);
    }
    m.sector_head = ClassifierHead::init(cfg.hidden_dim, cfg.num_sectors, rng);
    m.industry_head =
        ClassifierHead::init(cfg.hidden_dim, cfg.num_industries, rng);
    return m;
  }

  /// Every parameter tensor in a fixed order (the checkpoint order).
  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out = encoder.parameters();
    for (const auto& t : gnn.parameters()) {
      if (t.defined()) out.push_back(t);
    }
    out.insert(out.end(), {sector_head.weight, sector_head.bias,
                           industry_head.weight, industry_head.bias});
    return out;
  }

  std::vector<Tensor> trainable_parameters() const {
    std::vector<Tensor> out;
    for (const auto& t : parameters()) {
      if (t.requires_grad()) out.push_back(t);
    }
    return out;
  }

  /// Deep copy; the clone shares no storage with this model.
  SetnModel clone() const {
    SetnModel copy = *this;
    auto rebind = [](Tensor& t) {
      if (t.defined()) t = t.clone();
    };
    rebind(copy.encoder.token_embedding);
    rebind(copy.encoder.position_embedding);
    for (auto& b : copy.encoder.blocks) {
      for (Tensor* t : {&b.query_w, &b.query_b, &b.key_w, &b.key_b, &b.value_w,
                        &b.value_b, &b.out_w, &b.out_b, &b.attn_norm_gain,
                        &b.attn_norm_shift, &b.ff_in_w, &b.ff_in_b, &b.ff_out_w,
                        &b.ff_out_b, &b.ff_norm_gain, &b.ff_norm_shift}) {
        rebind(*t);
      }
    }
    rebind(copy.gnn.weight);
    rebind(copy.gnn.bias);
    rebind(copy.gnn.attention);
    rebind(copy.sector_head.weight);
    rebind(copy.sector_head.bias);
    rebind(copy.industry_head.weight);
    rebind(copy.industry_head.bias);
    return copy;
  }
};

/// Token sequence of one stock, tagged with its global id so that member
/// alignment can be checked.
struct StockText {
  std::size_t id = 0;
  const TokenSequence* tokens = nullptr;
};

/// Memoizes the output of the frozen encoder prefix (embeddings plus leading
/// frozen blocks) per stock. Exact, since frozen stages are deterministic
/// and never updated. Not thread-safe.
class EncodingCache {
 public:
  Tensor prefix(const TokenSequence& tokens, std::size_t stock_id,
                const TextEncoderParams& params, std::size_t depth) {
    if (depth != depth_) {
      entries_.clear();
      depth_ = depth;
    }
    auto it = entries_.find(stock_id);
    if (it != entries_.end()) return it->second;
    Tape tape = Tape::no_grad();
    Tensor out = encode_prefix(tape, tokens, params, depth);
    entries_.emplace(stock_id, out);
    return out;
  }

  void clear() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }

 private:
  std::size_t depth_ = 0;
  std::unordered_map<std::size_t, Tensor> entries_;
};

struct ForwardResult {
  Tensor embedding;        // h [d]
  Tensor sector_logits;    // [num_sectors]
  Tensor industry_logits;  // [num_industries]
};

/// Pooled text embedding of one document.
inline Tensor encode_text(Tape& tape, const SetnModel& model,
                          const StockText& text, EncodingCache* cache) {
  const auto& params = model.encoder;
  Tensor hidden;
  auto frozen = params.frozen_prefix_blocks();
  if (cache != nullptr && frozen) {
    hidden = encode_from(tape, cache->prefix(*text.tokens, text.id, params, *frozen),
                         params, *frozen);
  } else {
    hidden = encode(tape, *text.tokens, params);
  }
  return pool(tape, hidden, model.config.pooling);
}

/// Full SETN forward pass for the subgraph's target (member 0).
///
/// Every member's description is encoded and pooled into H; the GNN runs
/// over H; the exported embedding is h = H_text[0] + H_gnn[0] with the
/// residual connection, H_gnn[0] without it, H_text[0] when the GNN is off.
/// Each head sees dropout(ReLU(h)) through a single affine layer.
template <typename Rng>
ForwardResult forward(Tape& tape, const SetnModel& model, const Subgraph& sub,
                      std::span<const StockText> member_texts, bool training,
                      Rng& rng, EncodingCache* cache = nullptr) {
  if (member_texts.size() != sub.size()) {
    throw ContractError("forward: " + std::to_string(member_texts.size()) +
                        " texts for a subgraph of " +
                        std::to_string(sub.size()) + " members");
  }
  for (std::size_t i = 0; i < sub.size(); ++i) {
    if (member_texts[i].id != sub.members[i] || member_texts[i].tokens == nullptr) {
      throw ContractError("forward: text " + std::to_string(i) +
                          " belongs to stock " +
                          std::to_string(member_texts[i].id) + ", member is " +
                          std::to_string(sub.members[i]));
    }
  }
  const auto& cfg = model.config;
  Tensor h;
  if (cfg.gnn == GnnKind::kNone) {
    h = encode_text(tape, model, member_texts[0], cache);
  } else {
    std::vector<Tensor> pooled;
    pooled.reserve(sub.size());
    for (const auto& text : member_texts) {
      pooled.push_back(encode_text(tape, model, text, cache));
    }
    Tensor text_matrix = ops::stack_rows(tape, pooled);
    Tensor graph_out = gnn_layer(tape, cfg.gnn, text_matrix, sub, model.gnn);
    Tensor target_graph = ops::select_row(tape, graph_out, 0);
    h = cfg.residual ? ops::add(tape, pooled[0], target_graph) : target_graph;
  }

  const std::size_t d = h.size();
  Tensor head_in = ops::dropout(tape, ops::relu(tape, h), cfg.dropout, training, rng);
  head_in = ops::reshape(tape, head_in, {1, d});
  auto head = [&](const ClassifierHead& c) {
    Tensor logits = ops::linear(tape, head_in, c.weight, c.bias);
    return ops::reshape(tape, logits, {c.bias.size()});
  };
  return {h, head(model.sector_head), head(model.industry_head)};
}

/// Sum of the sector and industry cross-entropies of the target stock.
inline Tensor compute_loss(Tape& tape, const ForwardResult& result,
                           std::size_t sector, std::size_t industry) {
  Tensor sector_loss = ops::cross_entropy(tape, result.sector_logits, sector);
  Tensor industry_loss =
      ops::cross_entropy(tape, result.industry_logits, industry);
  return ops::add(tape, sector_loss, industry_loss);
}

/// Exported stock embedding: h from an evaluation-mode forward pass.
inline std::vector<double> embed_stock(const SetnModel& model,
                                       const Subgraph& sub,
                                       std::span<const StockText> member_texts,
                                       EncodingCache* cache = nullptr) {
  Tape tape = Tape::no_grad();
  std::mt19937_64 unused(0);
  ForwardResult r = forward(tape, model, sub, member_texts, false, unused, cache);
  return {r.embedding.data().begin(), r.embedding.data().end()};
}

}  // namespace setn
