#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "setn/core/errors.hpp"
#include "setn/data/records.hpp"
#include "setn/eval/embedding_matrix.hpp"
#include "setn/eval/metrics.hpp"
#include "setn/graph/layers.hpp"
#include "setn/graph/stock_graph.hpp"
#include "setn/model/setn_model.hpp"
#include "setn/numerics/adam.hpp"
#include "setn/text/vocab.hpp"
#include "setn/train/config.hpp"
#include "setn/train/split.hpp"

namespace setn {

/// Everything training needs, tokenized once.
struct Dataset {
  std::vector<StockRecord> records;
  StockGraph graph;  // as loaded: cause → effect
  std::vector<TokenSequence> tokens;
  std::size_t vocab_size = 0;
  std::size_t num_sectors = 0;
  std::size_t num_industries = 0;
};

inline Dataset make_dataset(std::vector<StockRecord> records, StockGraph graph,
                            const Vocab& vocab, const Taxonomy& taxonomy,
                            std::size_t max_tokens = kMaxTokens) {
  if (graph.num_nodes() != records.size()) {
    throw DataError("graph has " + std::to_string(graph.num_nodes()) +
                    " nodes but there are " + std::to_string(records.size()) +
                    " stocks");
  }
  Dataset ds;
  ds.tokens.reserve(records.size());
  for (const auto& r : records) ds.tokens.push_back(tokenize(r.text, vocab, max_tokens));
  ds.records = std::move(records);
  ds.graph = std::move(graph);
  ds.vocab_size = vocab.size();
  ds.num_sectors = taxonomy.num_sectors();
  ds.num_industries = taxonomy.num_industries();
  return ds;
}

/// The graph a configuration trains and embeds on. Subgraphs gather
/// in-neighbors, so out-neighbor aggregation runs on the reversed graph.
inline StockGraph working_graph(const Dataset& ds, const TrainConfig& cfg) {
  if (!cfg.directed) return to_undirected(ds.graph);
  return cfg.in_neighbors ? ds.graph : ds.graph.reversed();
}

inline std::vector<StockText> member_texts(const Dataset& ds, const Subgraph& sub) {
  std::vector<StockText> texts;
  texts.reserve(sub.size());
  for (std::size_t id : sub.members) texts.push_back({id, &ds.tokens[id]});
  return texts;
}

/// Embeddings h of `ids`, one row each, in the given order.
inline EmbeddingMatrix embed_ids(const SetnModel& model, const Dataset& ds,
                                 const StockGraph& graph,
                                 const std::vector<std::size_t>& ids,
                                 EncodingCache* cache = nullptr) {
  std::vector<double> values;
  values.reserve(ids.size() * model.config.hidden_dim);
  for (std::size_t id : ids) {
    const Subgraph sub = sample_subgraph(graph, id);
    const auto texts = member_texts(ds, sub);
    const auto h = embed_stock(model, sub, texts, cache);
    values.insert(values.end(), h.begin(), h.end());
  }
  return EmbeddingMatrix(ids, model.config.hidden_dim, std::move(values));
}

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_map5_sector;
  std::optional<double> val_map5_industry;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Seed of epoch `epoch`: a splitmix64 mix of the run seed and the index.
inline std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (epoch + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Visiting order of the training targets in one epoch.
inline std::vector<std::size_t> epoch_order(std::vector<std::size_t> train_ids,
                                            std::uint64_t seed, std::size_t epoch) {
  std::mt19937_64 rng(epoch_seed(seed, epoch));
  std::shuffle(train_ids.begin(), train_ids.end(), rng);
  return train_ids;
}

/// One forward/backward/Adam step on a single target. Returns the loss.
template <typename Rng>
double train_step(SetnModel& model, const Dataset& ds, const StockGraph& graph,
                  std::size_t target, AdamState& adam,
                  std::vector<Tensor>& params, Rng& rng, EncodingCache* cache) {
  const Subgraph sub = sample_subgraph(graph, target);
  const auto texts = member_texts(ds, sub);
  Tape tape;
  ForwardResult r = forward(tape, model, sub, texts, true, rng, cache);
  const StockRecord& rec = ds.records[target];
  Tensor loss = compute_loss(tape, r, rec.sector, rec.industry);
  const double value = loss.item();
  tape.backward(loss);
  adam_step(params, adam);
  for (auto& p : params) p.zero_grad();
  return value;
}

/// Fits `model` in place: per epoch, every training target once in seeded
/// order, one Adam step each; then validation MAP@5 for both taxonomies.
inline std::vector<EpochLog> train(SetnModel& model, const Dataset& ds,
                                   const Split& split, const TrainConfig& cfg,
                                   const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (split.train.empty()) throw ParameterError("train: empty training split");
  for (std::size_t id : split.train) {
    if (id >= ds.records.size()) {
      throw LabelError("train: stock " + std::to_string(id) + " has no record");
    }
    const auto& r = ds.records[id];
    if (r.sector >= model.config.num_sectors ||
        r.industry >= model.config.num_industries) {
      throw LabelError("train: stock " + std::to_string(id) +
                       " has a label outside the model's classes");
    }
  }
  const StockGraph graph = working_graph(ds, cfg);
  std::vector<Tensor> params = model.trainable_parameters();
  AdamState adam;
  adam.config.learning_rate = cfg.learning_rate;
  EncodingCache cache;

  std::vector<EpochLog> log;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = epoch_order(split.train, cfg.seed, epoch);
    std::mt19937_64 dropout_rng(epoch_seed(cfg.seed ^ 0xd1b54a32d192ed03ULL, epoch));
    double total = 0.0;
    for (std::size_t target : order) {
      try {
        total += train_step(model, ds, graph, target, adam, params, dropout_rng, &cache);
      } catch (const NonFiniteError& e) {
        throw NonFiniteError("epoch " + std::to_string(epoch) + ", target " +
                             std::to_string(target) + ": " + e.what());
      }
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = total / static_cast<double>(order.size());
    if (split.validation.size() >= 2) {
      const auto e = embed_ids(model, ds, graph, split.validation, &cache);
      const std::vector<std::size_t> k5{5};
      const auto m = map_by_taxonomy(e, ds.records, k5);
      entry.val_map5_sector = m.sector[0];
      entry.val_map5_industry = m.industry[0];
    }
    log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return log;
}

struct RunResult {
  SetnModel model;
  std::vector<EpochLog> log;
  TaxonomyMap test;
};

/// Split, initialize, train and score the test split.
inline RunResult train_and_evaluate(const Dataset& ds, const TrainConfig& cfg,
                                    const EpochCallback& on_epoch = {}) {
  cfg.validate();
  std::vector<std::size_t> ids(ds.records.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  const Split split = split_dataset(ids, cfg.split, cfg.seed);
  RunResult out;
  out.model = SetnModel::init(
      cfg.model_config(ds.vocab_size, ds.num_sectors, ds.num_industries), cfg.seed);
  out.log = train(out.model, ds, split, cfg, on_epoch);
  const auto e = embed_ids(out.model, ds, working_graph(ds, cfg), split.test);
  out.test = map_by_taxonomy(e, ds.records, cfg.ks);
  return out;
}

}  // namespace setn
