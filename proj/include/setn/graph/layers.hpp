#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "setn/core/errors.hpp"
#include "setn/graph/stock_graph.hpp"
#include "setn/numerics/init.hpp"
#include "setn/numerics/ops.hpp"

namespace setn {

/// A target stock and its 1-hop neighborhood, re-indexed locally with the
/// target at index 0.
struct Subgraph {
  std::size_t target = 0;
  std::vector<std::size_t> members;  // global ids, target first
  std::vector<Edge> edges;           // local indices

  std::size_t size() const { return members.size(); }
};

/// Target plus the sources of its incoming edges. On an undirected graph
/// that is the full neighborhood. Neighbors follow ascending global id.
inline Subgraph sample_subgraph(const StockGraph& g, std::size_t target) {
  if (target >= g.num_nodes()) {
    throw ContractError("sample_subgraph: target " + std::to_string(target) +
                        " outside [0, " + std::to_string(g.num_nodes()) + ")");
  }
  Subgraph sub;
  sub.target = target;
  sub.members.push_back(target);
  for (std::size_t u : g.in_neighbors(target)) sub.members.push_back(u);

  std::unordered_map<std::size_t, std::size_t> local;
  for (std::size_t i = 0; i < sub.members.size(); ++i) {
    local.emplace(sub.members[i], i);
  }
  for (std::size_t i = 0; i < sub.members.size(); ++i) {
    for (std::size_t dst : g.out_neighbors(sub.members[i])) {
      if (auto it = local.find(dst); it != local.end()) {
        sub.edges.push_back({i, it->second});
      }
    }
  }
  std::sort(sub.edges.begin(), sub.edges.end());
  return sub;
}

/// Dense adjacency with self-loops, Â[i][j] = 1 iff edge j→i or i = j.
inline std::vector<double> adjacency_with_self_loops(const Subgraph& sub) {
  const std::size_t n = sub.size();
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
  for (const Edge& e : sub.edges) a[e.dst * n + e.src] = 1.0;
  return a;
}

/// D̂^{-1/2} Â D̂^{-1/2} with D̂ the row sums of Â.
inline Tensor gcn_normalize(const Subgraph& sub) {
  const std::size_t n = sub.size();
  if (n == 0) throw ContractError("gcn_normalize: empty subgraph");
  std::vector<double> a = adjacency_with_self_loops(sub);
  std::vector<double> inv_sqrt_deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += a[i * n + j];
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a[i * n + j] *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
    }
  }
  return Tensor::from({n, n}, std::move(a));
}

enum class GnnKind { kGcn, kGat, kNone };

struct GnnParams {
  Tensor weight;     // [d × d]
  Tensor bias;       // [d]
  Tensor attention;  // [2d], GAT only

  template <typename Rng>
  static GnnParams init(std::size_t dim, GnnKind kind, Rng& rng) {
    GnnParams p;
    p.weight = init::xavier_uniform(dim, dim, rng);
    p.bias = init::zeros({dim});
    if (kind == GnnKind::kGat) {
      p.attention =
          init::normal({2 * dim}, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
    }
    return p;
  }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out{weight, bias};
    if (attention.defined()) out.push_back(attention);
    return out;
  }
};

namespace detail {

inline void check_layer_input(const Tensor& h, const Subgraph& sub,
                              const GnnParams& p, const char* layer) {
  if (h.rank() != 2 || h.dim(0) != sub.size()) {
    throw DimensionError(std::string(layer) + ": H" + shape_string(h.shape()) +
                         " for a subgraph of " + std::to_string(sub.size()) +
                         " members");
  }
  if (p.weight.rank() != 2 || p.weight.dim(0) != h.dim(1) ||
      p.weight.dim(1) != p.weight.dim(0)) {
    throw DimensionError(std::string(layer) + ": W" +
                         shape_string(p.weight.shape()) + " for H" +
                         shape_string(h.shape()));
  }
}

}  // namespace detail

/// ReLU(D̂^{-1/2} Â D̂^{-1/2} · H · W + b)
inline Tensor gcn_layer(Tape& tape, const Tensor& h, const Subgraph& sub,
                        const GnnParams& p) {
  detail::check_layer_input(h, sub, p, "gcn_layer");
  Tensor propagated = ops::matmul(tape, gcn_normalize(sub), h);
  return ops::relu(tape, ops::linear(tape, propagated, p.weight, p.bias));
}

/// Attention coefficients α[n×n] of a GAT layer; row i is the softmax over
/// j ∈ in-neighbors(i) ∪ {i} of LeakyReLU(aᵀ[W h_i ‖ W h_j]).
inline Tensor gat_attention(Tape& tape, const Tensor& projected,
                            const Subgraph& sub, const GnnParams& p) {
  const std::size_t n = sub.size(), d = projected.dim(1);
  if (!p.attention.defined() || p.attention.size() != 2 * d) {
    throw DimensionError("gat_layer: attention vector must have " +
                         std::to_string(2 * d) + " entries");
  }
  // Columns 0 and 1 hold the receiver and sender halves of a.
  Tensor halves = ops::transpose(
      tape, ops::reshape(tape, p.attention, {2, d}));
  Tensor scores = ops::transpose(tape, ops::matmul(tape, projected, halves));
  Tensor receiver = ops::select_row(tape, scores, 0);
  Tensor sender = ops::select_row(tape, scores, 1);
  Tensor logits =
      ops::leaky_relu(tape, ops::pairwise_sum(tape, receiver, sender));
  std::vector<std::uint8_t> mask(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) mask[i * n + i] = 1;
  for (const Edge& e : sub.edges) mask[e.dst * n + e.src] = 1;
  return ops::masked_softmax_rows(tape, logits, mask);
}

/// ReLU(Σ_j α_ij W h_j + b)
inline Tensor gat_layer(Tape& tape, const Tensor& h, const Subgraph& sub,
                        const GnnParams& p) {
  detail::check_layer_input(h, sub, p, "gat_layer");
  Tensor projected = ops::matmul(tape, h, p.weight);
  Tensor alpha = gat_attention(tape, projected, sub, p);
  return ops::relu(
      tape, ops::add_bias(tape, ops::matmul(tape, alpha, projected), p.bias));
}

inline Tensor gnn_layer(Tape& tape, GnnKind kind, const Tensor& h,
                        const Subgraph& sub, const GnnParams& p) {
  switch (kind) {
    case GnnKind::kGcn:
      return gcn_layer(tape, h, sub, p);
    case GnnKind::kGat:
      return gat_layer(tape, h, sub, p);
    case GnnKind::kNone:
      return h;
  }
  throw ParameterError("unknown GNN kind");
}

}  // namespace setn
