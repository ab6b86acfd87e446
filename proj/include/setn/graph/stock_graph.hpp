#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "setn/core/errors.hpp"

namespace setn {

/// Directed edge (cause → effect).
struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Node/edge store over dense stock ids [0, N). Immutable after construction.
///
/// Edges are kept sorted and unique; self-loops are never stored (the GNN
/// layers add them analytically). An undirected graph stores both
/// orientations of every edge.
class StockGraph {
 public:
  StockGraph() = default;

  StockGraph(std::size_t num_nodes, std::vector<Edge> edges,
             bool directed = true)
      : num_nodes_(num_nodes), directed_(directed) {
    for (const Edge& e : edges) {
      if (e.src >= num_nodes || e.dst >= num_nodes) {
        throw DataError("edge (" + std::to_string(e.src) + ", " +
                        std::to_string(e.dst) + ") outside node range [0, " +
                        std::to_string(num_nodes) + ")");
      }
      if (e.src == e.dst) {
        throw DataError("self-loop on node " + std::to_string(e.src));
      }
    }
    if (!directed) {
      const std::size_t m = edges.size();
      for (std::size_t i = 0; i < m; ++i) {
        edges.push_back({edges[i].dst, edges[i].src});
      }
    }
    std::sort(edges.begin(), edges.end());
    if (directed &&
        std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
      auto dup = *std::adjacent_find(edges.begin(), edges.end());
      throw DataError("duplicate edge (" + std::to_string(dup.src) + ", " +
                      std::to_string(dup.dst) + ")");
    }
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);
    in_.assign(num_nodes_, {});
    out_.assign(num_nodes_, {});
    for (const Edge& e : edges_) {
      out_[e.src].push_back(e.dst);
      in_[e.dst].push_back(e.src);
    }
    for (auto& list : in_) std::sort(list.begin(), list.end());
  }

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  bool directed() const { return directed_; }
  const std::vector<Edge>& edges() const { return edges_; }

  const std::vector<std::size_t>& in_neighbors(std::size_t v) const {
    return in_.at(v);
  }
  const std::vector<std::size_t>& out_neighbors(std::size_t v) const {
    return out_.at(v);
  }

  bool has_edge(std::size_t src, std::size_t dst) const {
    return std::binary_search(edges_.begin(), edges_.end(), Edge{src, dst});
  }

  /// Every edge flipped; used to sample out-neighborhoods instead of
  /// in-neighborhoods.
  StockGraph reversed() const {
    std::vector<Edge> flipped;
    flipped.reserve(edges_.size());
    for (const Edge& e : edges_) flipped.push_back({e.dst, e.src});
    StockGraph g(num_nodes_, std::move(flipped), true);
    g.directed_ = directed_;
    return g;
  }

 private:
  std::size_t num_nodes_ = 0;
  bool directed_ = true;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
};

/// Symmetrized, deduplicated copy with the directed flag cleared.
inline StockGraph to_undirected(const StockGraph& g) {
  return StockGraph(g.num_nodes(), g.edges(), false);
}

struct EdgeLoadStats {
  std::size_t lines = 0;
  std::size_t duplicates_dropped = 0;
  std::size_t self_loops_dropped = 0;
};

/// Builds a graph from raw pairs, dropping self-loops and repeated edges.
inline StockGraph normalize_edges(std::size_t num_nodes, std::vector<Edge> raw,
                                  EdgeLoadStats* stats = nullptr) {
  EdgeLoadStats local;
  std::vector<Edge> kept;
  kept.reserve(raw.size());
  for (const Edge& e : raw) {
    if (e.src == e.dst) {
      ++local.self_loops_dropped;
    } else {
      kept.push_back(e);
    }
  }
  std::sort(kept.begin(), kept.end());
  const auto before = kept.size();
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  local.duplicates_dropped = before - kept.size();
  local.lines = raw.size();
  if (stats) *stats = local;
  return StockGraph(num_nodes, std::move(kept), true);
}

/// edges.tsv: "src<TAB>dst" per line, integer node ids, direction cause →
/// effect. Blank lines and lines starting with '#' are skipped.
inline StockGraph load_edges(const std::string& path, std::size_t num_nodes,
                             EdgeLoadStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge file " + path);
  std::vector<Edge> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    auto fail = [&] {
      return DataError(path + ":" + std::to_string(line_no) +
                       ": expected \"src<TAB>dst\" with integer ids, got '" +
                       line + "'");
    };
    if (tab == std::string::npos) throw fail();
    Edge e;
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, tab), b = line.substr(tab + 1);
      if (a.empty() || b.empty() || a[0] == '-' || b[0] == '-') throw fail();
      e.src = std::stoull(a, &used);
      if (used != a.size()) throw fail();
      e.dst = std::stoull(b, &used);
      if (used != b.size()) throw fail();
    } catch (const std::logic_error&) {
      throw fail();
    }
    if (e.src >= num_nodes || e.dst >= num_nodes) {
      throw DataError(path + ":" + std::to_string(line_no) + ": node id outside [0, " +
                      std::to_string(num_nodes) + ")");
    }
    raw.push_back(e);
  }
  return normalize_edges(num_nodes, std::move(raw), stats);
}

inline void save_edges(const StockGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write edge file " + path);
  for (const Edge& e : g.edges()) out << e.src << '\t' << e.dst << '\n';
}

}  // namespace setn
