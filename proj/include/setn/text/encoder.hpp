#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "setn/core/errors.hpp"
#include "setn/numerics/init.hpp"
#include "setn/numerics/ops.hpp"
#include "setn/numerics/tape.hpp"
#include "setn/text/vocab.hpp"

namespace setn {

enum class Pooling { kCls, kMean, kMax };

/// Which encoder parameters receive gradients during training.
enum class EncoderPolicy {
  kAll,            // embeddings and every block
  kLastBlockOnly,  // only the final block
  kNone,           // frozen encoder
};

/// Single-head self-attention block with a two-layer feedforward, each
/// sub-layer wrapped in residual addition and layer normalization.
struct EncoderBlock {
  Tensor query_w, query_b, key_w, key_b, value_w, value_b, out_w, out_b;
  Tensor attn_norm_gain, attn_norm_shift;
  Tensor ff_in_w, ff_in_b, ff_out_w, ff_out_b;
  Tensor ff_norm_gain, ff_norm_shift;
  bool trainable = true;

  std::vector<Tensor> parameters() const {
    return {query_w,        query_b,         key_w,   key_b,    value_w,
            value_b,        out_w,           out_b,   attn_norm_gain,
            attn_norm_shift, ff_in_w,        ff_in_b, ff_out_w, ff_out_b,
            ff_norm_gain,   ff_norm_shift};
  }

  template <typename Rng>
  static EncoderBlock init(std::size_t dim, std::size_t ff_dim, Rng& rng) {
    EncoderBlock b;
    b.query_w = init::xavier_uniform(dim, dim, rng);
    b.query_b = init::zeros({dim});
    b.key_w = init::xavier_uniform(dim, dim, rng);
    b.key_b = init::zeros({dim});
    b.value_w = init::xavier_uniform(dim, dim, rng);
    b.value_b = init::zeros({dim});
    b.out_w = init::xavier_uniform(dim, dim, rng);
    b.out_b = init::zeros({dim});
    b.attn_norm_gain = init::ones({dim});
    b.attn_norm_shift = init::zeros({dim});
    b.ff_in_w = init::xavier_uniform(dim, ff_dim, rng);
    b.ff_in_b = init::zeros({ff_dim});
    b.ff_out_w = init::xavier_uniform(ff_dim, dim, rng);
    b.ff_out_b = init::zeros({dim});
    b.ff_norm_gain = init::ones({dim});
    b.ff_norm_shift = init::zeros({dim});
    return b;
  }
};

struct EncoderShape {
  std::size_t vocab_size = 0;
  std::size_t hidden_dim = 64;
  std::size_t num_blocks = 2;
  std::size_t ff_dim = 128;
  std::size_t max_positions = kMaxTokens;
};

/// Compact trainable stand-in for a pretrained transformer text encoder:
/// token + learned absolute position embeddings followed by encoder blocks.
struct TextEncoderParams {
  Tensor token_embedding;     // [|V| × d]
  Tensor position_embedding;  // [max_positions × d]
  bool embeddings_trainable = true;
  std::vector<EncoderBlock> blocks;

  std::size_t hidden_dim() const { return token_embedding.dim(1); }
  std::size_t vocab_size() const { return token_embedding.dim(0); }
  std::size_t max_positions() const { return position_embedding.dim(0); }

  template <typename Rng>
  static TextEncoderParams init(const EncoderShape& shape, Rng& rng) {
    if (shape.vocab_size <= kReservedIds || shape.hidden_dim == 0 ||
        shape.max_positions == 0) {
      throw ParameterError("text encoder: vocab_size, hidden_dim and "
                           "max_positions must be positive");
    }
    TextEncoderParams p;
    p.token_embedding =
        init::normal({shape.vocab_size, shape.hidden_dim}, 1.0, rng);
    p.position_embedding =
        init::normal({shape.max_positions, shape.hidden_dim}, 0.1, rng);
    for (std::size_t i = 0; i < shape.num_blocks; ++i) {
      p.blocks.push_back(EncoderBlock::init(shape.hidden_dim, shape.ff_dim, rng));
    }
    return p;
  }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out{token_embedding, position_embedding};
    for (const auto& b : blocks) {
      auto bp = b.parameters();
      out.insert(out.end(), bp.begin(), bp.end());
    }
    return out;
  }

  /// Number of leading stages (embedding, then blocks) that are frozen and
  /// therefore produce a fixed output per document. nullopt when the
  /// embeddings themselves train.
  std::optional<std::size_t> frozen_prefix_blocks() const {
    if (embeddings_trainable) return std::nullopt;
    std::size_t n = 0;
    while (n < blocks.size() && !blocks[n].trainable) ++n;
    return n;
  }
};

inline void set_trainable(TextEncoderParams& params, EncoderPolicy policy) {
  const std::size_t n = params.blocks.size();
  if (policy == EncoderPolicy::kLastBlockOnly && n == 0) {
    throw ParameterError(
        "set_trainable: last_block_only requires at least one encoder block");
  }
  params.embeddings_trainable = policy == EncoderPolicy::kAll;
  params.token_embedding.set_requires_grad(params.embeddings_trainable);
  params.position_embedding.set_requires_grad(params.embeddings_trainable);
  for (std::size_t i = 0; i < n; ++i) {
    const bool on = policy == EncoderPolicy::kAll ||
                    (policy == EncoderPolicy::kLastBlockOnly && i + 1 == n);
    params.blocks[i].trainable = on;
    for (auto& t : params.blocks[i].parameters()) t.set_requires_grad(on);
  }
}

/// Token plus position embedding rows → [len × d].
inline Tensor embed_tokens(Tape& tape, const TokenSequence& tokens,
                           const TextEncoderParams& params) {
  if (tokens.ids.empty()) throw ContractError("encode: empty token sequence");
  if (tokens.size() > params.max_positions()) {
    throw DataError("encode: " + std::to_string(tokens.size()) +
                    " tokens exceed " + std::to_string(params.max_positions()) +
                    " positions");
  }
  std::vector<std::size_t> positions(tokens.size());
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  Tensor words = ops::gather_rows(tape, params.token_embedding, tokens.ids);
  Tensor where = ops::gather_rows(tape, params.position_embedding, positions);
  return ops::add(tape, words, where);
}

inline Tensor apply_block(Tape& tape, const Tensor& x,
                          const EncoderBlock& block) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.dim(1)));
  Tensor q = ops::linear(tape, x, block.query_w, block.query_b);
  Tensor k = ops::linear(tape, x, block.key_w, block.key_b);
  Tensor v = ops::linear(tape, x, block.value_w, block.value_b);
  Tensor scores = ops::scale(tape, ops::matmul(tape, q, ops::transpose(tape, k)),
                             scale);
  Tensor attended = ops::matmul(tape, ops::softmax_rows(tape, scores), v);
  Tensor mixed = ops::linear(tape, attended, block.out_w, block.out_b);
  Tensor h = ops::layer_norm(tape, ops::add(tape, x, mixed),
                             block.attn_norm_gain, block.attn_norm_shift);
  Tensor inner = ops::relu(tape, ops::linear(tape, h, block.ff_in_w, block.ff_in_b));
  Tensor ff = ops::linear(tape, inner, block.ff_out_w, block.ff_out_b);
  return ops::layer_norm(tape, ops::add(tape, h, ff), block.ff_norm_gain,
                         block.ff_norm_shift);
}

/// Runs blocks [first_block, L) over an already embedded sequence.
inline Tensor encode_from(Tape& tape, Tensor hidden,
                          const TextEncoderParams& params,
                          std::size_t first_block) {
  for (std::size_t i = first_block; i < params.blocks.size(); ++i) {
    hidden = apply_block(tape, hidden, params.blocks[i]);
  }
  return hidden;
}

/// Runs the embedding and the first `num_blocks` blocks.
inline Tensor encode_prefix(Tape& tape, const TokenSequence& tokens,
                            const TextEncoderParams& params,
                            std::size_t num_blocks) {
  Tensor hidden = embed_tokens(tape, tokens, params);
  for (std::size_t i = 0; i < num_blocks && i < params.blocks.size(); ++i) {
    hidden = apply_block(tape, hidden, params.blocks[i]);
  }
  return hidden;
}

/// Token sequence → contextual token vectors [len × d]. Frozen blocks run
/// forward only: their tensors do not require gradients, so nothing flows
/// into them.
inline Tensor encode(Tape& tape, const TokenSequence& tokens,
                     const TextEncoderParams& params) {
  return encode_prefix(tape, tokens, params, params.blocks.size());
}

inline Tensor pool(Tape& tape, const Tensor& hidden, Pooling strategy) {
  if (hidden.rank() != 2 || hidden.dim(0) == 0) {
    throw ContractError("pool: expected a non-empty [len × d] matrix");
  }
  switch (strategy) {
    case Pooling::kCls:
      return ops::select_row(tape, hidden, 0);
    case Pooling::kMean:
      return ops::mean_rows(tape, hidden);
    case Pooling::kMax:
      return ops::max_rows(tape, hidden);
  }
  throw ParameterError("pool: unknown strategy");
}

}  // namespace setn
