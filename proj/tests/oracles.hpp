#pragma once

// Brute-force references shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "setn/setn.hpp"

namespace setn::testing {

inline EmbeddingMatrix random_embeddings(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<double> v(n * d);
  for (double& x : v) x = dist(rng);
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return EmbeddingMatrix(ids, d, v);
}

// Independent brute force: full sort of (−cos, id) over everyone but the query.
inline std::vector<std::size_t> brute_ranking(const EmbeddingMatrix& e, std::size_t q) {
  const std::size_t n = e.rows(), d = e.dim();
  auto cosine = [&](std::size_t a, std::size_t b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t j = 0; j < d; ++j) {
      dot += e.row(a)[j] * e.row(b)[j];
      na += e.row(a)[j] * e.row(a)[j];
      nb += e.row(b)[j] * e.row(b)[j];
    }
    return dot / std::sqrt(na * nb);
  };
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t o = 0; o < n; ++o) {
    if (o != q) keyed.push_back({-cosine(q, o), e.ids()[o]});
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> out;
  for (const auto& [neg, id] : keyed) out.push_back(id);
  return out;
}

inline double brute_ap(const std::vector<std::uint8_t>& rel, std::size_t r, std::size_t k) {
  if (r == 0) return 0.0;
  double hits = 0, acc = 0;
  for (std::size_t i = 0; i < std::min(k, rel.size()); ++i) {
    if (rel[i]) {
      hits += 1;
      acc += hits / static_cast<double>(i + 1);
    }
  }
  return acc / static_cast<double>(std::min(k, r));
}

// Expected AP@5 under a uniformly random ranking: N−1 candidates of which R
// share the query's label, drawn without replacement.
inline double random_map5_oracle(double candidates, double relevant) {
  const double p = relevant / candidates;
  const double pair = p * (relevant - 1) / (candidates - 1);
  double acc = 0;
  for (int k = 1; k <= 5; ++k) acc += (p + (k - 1) * pair) / k;
  return acc / std::min(5.0, relevant);
}

// D̂^{-1/2} Â D̂^{-1/2} by explicit dense products.
inline std::vector<double> dense_gcn_oracle(const Subgraph& s) {
  const std::size_t n = s.size();
  std::vector<double> a(n * n, 0.0), deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
  for (const auto& e : s.edges) a[e.dst * n + e.src] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) deg[i] += a[i * n + j];
  }
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = a[i * n + j] / std::sqrt(deg[i]) / std::sqrt(deg[j]);
    }
  }
  return out;
}

// Dense GAT oracle: e_ij = LeakyReLU(a1·Wh_i + a2·Wh_j) over j ∈ N(i) ∪ {i}.
inline std::vector<double> dense_gat_oracle(const Tensor& h, const Subgraph& s,
                                     const GnnParams& p) {
  const std::size_t n = s.size(), d = h.dim(1);
  std::vector<double> wh(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t t = 0; t < d; ++t) wh[i * d + c] += h.at(i, t) * p.weight.at(t, c);
    }
  }
  std::vector<std::vector<bool>> nb(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) nb[i][i] = true;
  for (const auto& e : s.edges) nb[e.dst][e.src] = true;
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, -INFINITY);
    double peak = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      if (!nb[i][j]) continue;
      double z = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        z += p.attention[c] * wh[i * d + c] + p.attention[d + c] * wh[j * d + c];
      }
      e[j] = z > 0 ? z : 0.2 * z;
      peak = std::max(peak, e[j]);
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (nb[i][j]) norm += std::exp(e[j] - peak);
    }
    for (std::size_t c = 0; c < d; ++c) {
      double acc = p.bias[c];
      for (std::size_t j = 0; j < n; ++j) {
        if (nb[i][j]) acc += std::exp(e[j] - peak) / norm * wh[j * d + c];
      }
      out[i * d + c] = std::max(acc, 0.0);
    }
  }
  return out;
}

}  // namespace setn::testing
