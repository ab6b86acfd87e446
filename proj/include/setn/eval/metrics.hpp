#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "setn/core/errors.hpp"
#include "setn/data/records.hpp"
#include "setn/eval/embedding_matrix.hpp"

namespace setn {

struct Neighbor {
  std::size_t id = 0;
  double similarity = 0.0;
};

/// Unit-normalized copy of an embedding matrix for repeated cosine queries.
class CosineIndex {
 public:
  explicit CosineIndex(const EmbeddingMatrix& e) : e_(&e), unit_(e.values()) {
    const std::size_t d = e.dim();
    for (std::size_t r = 0; r < e.rows(); ++r) {
      double norm = 0.0;
      for (std::size_t j = 0; j < d; ++j) norm += unit_[r * d + j] * unit_[r * d + j];
      norm = std::sqrt(norm);
      for (std::size_t j = 0; j < d; ++j) unit_[r * d + j] /= norm;
    }
  }

  const EmbeddingMatrix& matrix() const { return *e_; }

  /// Similarities of row `r` against every row, self included.
  std::vector<double> similarities(std::size_t r) const {
    const std::size_t n = e_->rows(), d = e_->dim();
    std::vector<double> sims(n);
    const double* q = unit_.data() + r * d;
    for (std::size_t o = 0; o < n; ++o) {
      const double* v = unit_.data() + o * d;
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += q[j] * v[j];
      sims[o] = dot;
    }
    return sims;
  }

  /// Top-k rows other than `r`, by descending similarity then ascending id.
  /// Returns row indices.
  std::vector<std::size_t> nearest_rows(std::size_t r, std::size_t k,
                                        bool include_self = false) const {
    const std::size_t n = e_->rows();
    const auto sims = similarities(r);
    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t o = 0; o < n; ++o) {
      if (include_self || o != r) order.push_back(o);
    }
    const auto& ids = e_->ids();
    auto before = [&](std::size_t a, std::size_t b) {
      if (include_self && (a == r || b == r)) return a == r && b != r;
      if (sims[a] != sims[b]) return sims[a] > sims[b];
      return ids[a] < ids[b];
    };
    k = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                      order.end(), before);
    order.resize(k);
    return order;
  }

 private:
  const EmbeddingMatrix* e_;
  std::vector<double> unit_;
};

/// Top-k stocks by cosine similarity to `query_id`, self excluded, ties by
/// ascending id. Requires k < N.
inline std::vector<Neighbor> cosine_knn(const EmbeddingMatrix& e,
                                        std::size_t query_id, std::size_t k) {
  if (k >= e.rows()) {
    throw ParameterError("cosine_knn: k=" + std::to_string(k) +
                         " must be below N=" + std::to_string(e.rows()));
  }
  const std::size_t r = e.row_of(query_id);
  CosineIndex index(e);
  const auto sims = index.similarities(r);
  std::vector<Neighbor> out;
  for (std::size_t o : index.nearest_rows(r, k)) {
    out.push_back({e.ids()[o], sims[o]});
  }
  return out;
}

/// (Σ_{k≤K} P@k · rel_k) / min(K, R); 0 when R = 0. Positions beyond K are
/// ignored.
inline double average_precision_at_k(std::span<const std::uint8_t> relevant,
                                     std::size_t total_relevant, std::size_t k) {
  if (k == 0) throw ParameterError("average_precision_at_k: K must be >= 1");
  if (total_relevant == 0) return 0.0;
  const std::size_t depth = std::min(k, relevant.size());
  double hits = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    if (relevant[i]) {
      hits += 1.0;
      sum += hits / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(std::min(k, total_relevant));
}

/// Labels of the rows of `e`, looked up by stock id.
inline std::vector<std::size_t> labels_for(
    const EmbeddingMatrix& e, const std::unordered_map<std::size_t, std::size_t>& labels) {
  std::vector<std::size_t> out;
  out.reserve(e.rows());
  for (std::size_t id : e.ids()) {
    auto it = labels.find(id);
    if (it == labels.end()) {
      throw LabelError("map_at_k: stock " + std::to_string(id) + " has no label");
    }
    out.push_back(it->second);
  }
  return out;
}

/// Mean AP@K over every stock in `e` as a query, relevance = same label.
/// `row_labels[r]` labels row r. One value per entry of `ks`; a K at or
/// above N retrieves the whole universe.
inline std::vector<double> map_at_k(const EmbeddingMatrix& e,
                                    std::span<const std::size_t> row_labels,
                                    std::span<const std::size_t> ks) {
  if (row_labels.size() != e.rows()) {
    throw LabelError("map_at_k: " + std::to_string(row_labels.size()) +
                     " labels for " + std::to_string(e.rows()) + " stocks");
  }
  std::vector<double> out(ks.size(), 0.0);
  if (ks.empty()) return out;
  for (std::size_t k : ks) {
    if (k == 0) throw ParameterError("map_at_k: K must be >= 1");
  }
  const std::size_t n = e.rows();
  if (n < 2) throw ContractError("map_at_k: need at least two stocks");
  std::unordered_map<std::size_t, std::size_t> class_size;
  for (std::size_t l : row_labels) ++class_size[l];
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());

  CosineIndex index(e);
  std::vector<std::uint8_t> rel;
  for (std::size_t r = 0; r < n; ++r) {
    const auto ranked = index.nearest_rows(r, k_max);
    rel.assign(ranked.size(), 0);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      rel[i] = row_labels[ranked[i]] == row_labels[r];
    }
    const std::size_t total = class_size[row_labels[r]] - 1;
    for (std::size_t q = 0; q < ks.size(); ++q) {
      out[q] += average_precision_at_k(rel, total, ks[q]);
    }
  }
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

struct TaxonomyMap {
  std::vector<std::size_t> ks;
  std::vector<double> sector;    // TOPIX17, one per K
  std::vector<double> industry;  // TOPIX33, one per K
};

/// MAP@K for both taxonomies over the stocks in `e`.
inline TaxonomyMap map_by_taxonomy(const EmbeddingMatrix& e,
                                   const std::vector<StockRecord>& records,
                                   std::vector<std::size_t> ks) {
  std::vector<std::size_t> sectors, industries;
  for (std::size_t id : e.ids()) {
    if (id >= records.size()) {
      throw LabelError("map_at_k: stock " + std::to_string(id) + " has no label");
    }
    sectors.push_back(records[id].sector);
    industries.push_back(records[id].industry);
  }
  TaxonomyMap out;
  out.sector = map_at_k(e, sectors, ks);
  out.industry = map_at_k(e, industries, ks);
  out.ks = std::move(ks);
  return out;
}

struct ThemeScore {
  std::string name;
  std::size_t size = 0;
  double value = 0.0;
  double random_guess = 0.0;  // expected value under random embeddings
};

struct ThemeReport {
  std::vector<ThemeScore> themes;
  double overall = 0.0;
  double random_guess = 0.0;
};

/// For each member i of theme t, retrieve the |t| stocks closest to i and
/// count those in t. Per theme: hits / |t|²; overall: mean over themes.
/// With include_self the query occupies the first retrieved slot.
inline ThemeReport theme_metric(const EmbeddingMatrix& e, const ThemeSet& themes,
                                bool include_self = false) {
  ThemeReport report;
  if (themes.themes.empty()) return report;
  CosineIndex index(e);
  const std::size_t n = e.rows();
  std::vector<std::uint8_t> in_theme(n, 0);
  for (const auto& theme : themes.themes) {
    const std::size_t m = theme.members.size();
    if (m < 2) {
      throw ContractError("theme_metric: theme '" + theme.name +
                          "' has fewer than two members");
    }
    if (m >= n + (include_self ? 1 : 0)) {
      throw ContractError("theme_metric: theme '" + theme.name +
                          "' is as large as the universe");
    }
    std::vector<std::size_t> rows;
    for (std::size_t id : theme.members) {
      if (!e.contains(id)) {
        throw DataError("theme_metric: member " + std::to_string(id) +
                        " of theme '" + theme.name + "' has no embedding");
      }
      rows.push_back(e.row_of(id));
    }
    for (std::size_t r : rows) in_theme[r] = 1;
    double hits = 0.0;
    for (std::size_t r : rows) {
      for (std::size_t o : index.nearest_rows(r, m, include_self)) hits += in_theme[o];
    }
    for (std::size_t r : rows) in_theme[r] = 0;

    const double md = static_cast<double>(m);
    const double others = static_cast<double>(n - 1);
    const double guess = include_self
                             ? (1.0 + (md - 1.0) * (md - 1.0) / others) / md
                             : (md - 1.0) / others;
    report.themes.push_back({theme.name, m, hits / (md * md), guess});
  }
  for (const auto& t : report.themes) {
    report.overall += t.value;
    report.random_guess += t.random_guess;
  }
  report.overall /= static_cast<double>(report.themes.size());
  report.random_guess /= static_cast<double>(report.themes.size());
  return report;
}

}  // namespace setn
