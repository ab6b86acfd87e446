#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "setn/core/errors.hpp"
#include "setn/data/records.hpp"
#include "setn/data/taxonomy.hpp"
#include "setn/graph/stock_graph.hpp"
#include "setn/text/vocab.hpp"

namespace setn {

enum class GraphModel {
  kPlantedInEdges,   // fixed in-degree; sources chosen by label and direction
  kStochasticBlock,  // independent edges, same-industry probability boosted
};

/// Knobs of the synthetic stock universe.
///
/// text_signal: probability that a description is drawn from its industry's
/// topic words (mixed with shared filler words); other descriptions are pure
/// filler. graph_signal: fraction of a stock's incoming edges that come from
/// its own industry. direction_signal: fraction of those same-industry edges
/// whose source is one of a few "hub" stocks of the industry, so that
/// incoming edges carry label information that outgoing edges do not.
struct SyntheticSpec {
  std::size_t num_stocks = 300;
  std::size_t num_sectors = 17;
  std::size_t num_industries = 33;
  std::size_t vocab_size = 400;  // including the three reserved ids
  std::size_t topic_words = 8;   // per industry
  std::size_t tokens_per_doc = 24;
  GraphModel graph_model = GraphModel::kPlantedInEdges;
  std::size_t in_degree = 4;
  double graph_signal = 0.6;
  double direction_signal = 0.0;
  double text_signal = 0.6;
  double topic_mix = 0.5;     // topic-word share inside an informative text
  double hub_fraction = 0.15; // hubs per industry, as a fraction of its size
  std::size_t theme_count = 6;
  std::size_t theme_size = 0;  // 0: a third of the stocks
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  Taxonomy taxonomy;
  std::vector<StockRecord> records;
  StockGraph graph;
  std::vector<RawTheme> themes;
  Vocab vocab;
};

namespace detail {

inline void require_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ParameterError(std::string("synthetic: ") + name +
                         " must lie in [0, 1]");
  }
}

inline std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace detail

inline void check_feasible(const SyntheticSpec& spec) {
  if (spec.num_sectors == 0 || spec.num_industries < spec.num_sectors) {
    throw ParameterError("synthetic: need 0 < sectors <= industries");
  }
  if (spec.num_industries > spec.num_stocks) {
    throw ParameterError("synthetic: more industries than stocks");
  }
  if (spec.vocab_size < kReservedIds + spec.num_industries * spec.topic_words + 1) {
    throw ParameterError("synthetic: vocabulary too small for the topic words");
  }
  if (spec.tokens_per_doc == 0 || spec.tokens_per_doc + 1 > kMaxTokens) {
    throw ParameterError("synthetic: tokens_per_doc must lie in [1, 511]");
  }
  if (spec.in_degree >= spec.num_stocks) {
    throw ParameterError("synthetic: in_degree must be below the stock count");
  }
  if (spec.theme_count > 0 && spec.num_stocks < 6) {
    throw ParameterError("synthetic: themes need at least 6 stocks");
  }
  if (spec.theme_size > spec.num_stocks) {
    throw ParameterError("synthetic: theme_size exceeds the stock count");
  }
  detail::require_unit(spec.graph_signal, "graph_signal");
  detail::require_unit(spec.direction_signal, "direction_signal");
  detail::require_unit(spec.text_signal, "text_signal");
  detail::require_unit(spec.topic_mix, "topic_mix");
  detail::require_unit(spec.hub_fraction, "hub_fraction");
}

/// Labels first, then text conditioned on industry, then edges conditioned
/// on labels, then themes. Deterministic per seed.
inline SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  check_feasible(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = spec.num_stocks;
  SyntheticDataset ds;

  // Taxonomy: surjective random industry → sector map.
  std::vector<std::size_t> industry_sector(spec.num_industries);
  {
    std::vector<std::size_t> order(spec.num_industries);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<std::size_t> any_sector(0, spec.num_sectors - 1);
    for (std::size_t i = 0; i < order.size(); ++i) {
      industry_sector[order[i]] = i < spec.num_sectors ? i : any_sector(rng);
    }
    std::vector<std::string> sectors;
    for (std::size_t s = 0; s < spec.num_sectors; ++s) {
      sectors.push_back(detail::numbered("SECTOR-", s, 2));
    }
    std::vector<std::pair<std::string, std::string>> industries;
    for (std::size_t i = 0; i < spec.num_industries; ++i) {
      industries.emplace_back(detail::numbered("Industry-", i, 2),
                              sectors[industry_sector[i]]);
    }
    ds.taxonomy = Taxonomy(std::move(sectors), std::move(industries));
  }

  // Balanced industry labels in shuffled order.
  std::vector<std::size_t> industry(n);
  for (std::size_t i = 0; i < n; ++i) industry[i] = i % spec.num_industries;
  std::shuffle(industry.begin(), industry.end(), rng);
  std::vector<std::vector<std::size_t>> by_industry(spec.num_industries);
  for (std::size_t i = 0; i < n; ++i) by_industry[industry[i]].push_back(i);

  // Vocabulary: per-industry topic words, then shared filler words.
  std::vector<std::string> words;
  for (std::size_t w = 0; w + kReservedIds < spec.vocab_size; ++w) {
    words.push_back(detail::numbered("tok", w, 4));
  }
  ds.vocab = Vocab::from_words(words);
  const std::size_t topic_total = spec.num_industries * spec.topic_words;
  std::uniform_int_distribution<std::size_t> topic_pick(0, spec.topic_words - 1);
  std::uniform_int_distribution<std::size_t> filler_pick(topic_total,
                                                         words.size() - 1);

  for (std::size_t i = 0; i < n; ++i) {
    StockRecord r;
    r.id = i;
    r.ticker = detail::numbered("T", i, 5);
    r.industry = industry[i];
    r.sector = industry_sector[industry[i]];
    const bool informative = unit(rng) < spec.text_signal;
    std::string text;
    for (std::size_t t = 0; t < spec.tokens_per_doc; ++t) {
      std::size_t w;
      if (informative && unit(rng) < spec.topic_mix) {
        w = industry[i] * spec.topic_words + topic_pick(rng);
      } else {
        w = filler_pick(rng);
      }
      if (t) text.push_back(' ');
      text += words[w];
    }
    r.text = std::move(text);
    ds.records.push_back(std::move(r));
  }

  // Edges.
  std::vector<Edge> edges;
  if (spec.graph_model == GraphModel::kPlantedInEdges) {
    std::vector<std::vector<std::size_t>> hubs(spec.num_industries);
    for (std::size_t c = 0; c < spec.num_industries; ++c) {
      auto members = by_industry[c];
      std::shuffle(members.begin(), members.end(), rng);
      const auto count = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::lround(spec.hub_fraction * static_cast<double>(members.size()))));
      members.resize(std::min(count, members.size()));
      hubs[c] = std::move(members);
    }
    auto pick_other = [&](const std::vector<std::size_t>& pool,
                          std::size_t self) -> std::optional<std::size_t> {
      if (pool.empty() || (pool.size() == 1 && pool[0] == self)) return std::nullopt;
      std::uniform_int_distribution<std::size_t> idx(0, pool.size() - 1);
      for (;;) {
        std::size_t u = pool[idx(rng)];
        if (u != self) return u;
      }
    };
    std::uniform_int_distribution<std::size_t> any(0, n - 1);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t k = 0; k < spec.in_degree; ++k) {
        std::optional<std::size_t> src;
        if (unit(rng) < spec.graph_signal) {
          if (unit(rng) < spec.direction_signal) {
            src = pick_other(hubs[industry[v]], v);
          }
          if (!src) src = pick_other(by_industry[industry[v]], v);
        }
        while (!src) {
          std::size_t u = any(rng);
          if (u != v) src = u;
        }
        edges.push_back({*src, v});
      }
    }
  } else {
    const double k = static_cast<double>(spec.in_degree);
    for (std::size_t v = 0; v < n; ++v) {
      const double same = static_cast<double>(by_industry[industry[v]].size() - 1);
      const double other = static_cast<double>(n - 1) - same;
      const double p_in = same > 0 ? std::min(1.0, spec.graph_signal * k / same) : 0.0;
      const double p_out =
          other > 0 ? std::min(1.0, (1.0 - spec.graph_signal) * k / other) : 0.0;
      for (std::size_t u = 0; u < n; ++u) {
        if (u == v) continue;
        const double p = industry[u] == industry[v] ? p_in : p_out;
        if (unit(rng) < p) edges.push_back({u, v});
      }
    }
  }
  ds.graph = normalize_edges(n, std::move(edges));

  // Themes: even-numbered themes lean on one sector, odd ones ignore labels.
  const std::size_t theme_size = spec.theme_size ? spec.theme_size : n / 3;
  for (std::size_t t = 0; t < spec.theme_count; ++t) {
    RawTheme theme;
    std::vector<std::size_t> chosen;
    std::vector<char> taken(n, 0);
    const bool sector_theme = t % 2 == 0;
    if (sector_theme) {
      std::uniform_int_distribution<std::size_t> pick_sector(0, spec.num_sectors - 1);
      const std::size_t s = pick_sector(rng);
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < n; ++i) {
        if (industry_sector[industry[i]] == s) pool.push_back(i);
      }
      std::shuffle(pool.begin(), pool.end(), rng);
      const std::size_t want = std::min(pool.size(), theme_size * 3 / 4);
      for (std::size_t i = 0; i < want; ++i) {
        chosen.push_back(pool[i]);
        taken[pool[i]] = 1;
      }
    }
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i]) rest.push_back(i);
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    for (std::size_t i = 0; chosen.size() < theme_size && i < rest.size(); ++i) {
      chosen.push_back(rest[i]);
    }
    theme.name = detail::numbered("theme-", t, 2) + (sector_theme ? "-sector" : "-mixed");
    for (std::size_t id : chosen) theme.tickers.push_back(ds.records[id].ticker);
    ds.themes.push_back(std::move(theme));
  }
  return ds;
}

/// Writes nodes.jsonl, edges.tsv, themes.jsonl, vocab.txt and taxonomy.json.
inline void save_dataset(const SyntheticDataset& ds,
                         const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string());
  save_nodes(ds.records, ds.taxonomy, (dir / "nodes.jsonl").string());
  save_edges(ds.graph, (dir / "edges.tsv").string());
  save_themes(ds.themes, (dir / "themes.jsonl").string());
  ds.vocab.save((dir / "vocab.txt").string());
  ds.taxonomy.save((dir / "taxonomy.json").string());
}

}  // namespace setn
