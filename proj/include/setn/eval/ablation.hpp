#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "setn/core/errors.hpp"
#include "setn/eval/report.hpp"
#include "setn/train/config.hpp"
#include "setn/train/trainer.hpp"

namespace setn {

enum class AblationAxis { kEncoderPolicy, kGraphType, kGnnKind, kResidual };

inline AblationAxis parse_axis(const std::string& s) {
  if (s == "graph_type") return AblationAxis::kGraphType;
  if (s == "encoder_policy") return AblationAxis::kEncoderPolicy;
  if (s == "gnn_kind") return AblationAxis::kGnnKind;
  if (s == "residual") return AblationAxis::kResidual;
  throw ParameterError("unknown ablation axis '" + s +
                       "' (expected graph_type, encoder_policy, gnn_kind or residual)");
}

struct AblationRow {
  TrainConfig config;
  TaxonomyMap test;
};

/// Every combination of the chosen axes, nested encoder policy → graph type
/// → GNN kind → residual. Axis values: {last, none}, {directed, undirected},
/// {gcn, gat}, {on, off}. Unchosen axes keep the base value.
inline std::vector<TrainConfig> ablation_cells(const TrainConfig& base,
                                               const std::set<AblationAxis>& axes) {
  if (axes.empty()) throw ParameterError("ablation: no axes given");
  std::vector<TrainConfig> cells{base};
  auto expand = [&](AblationAxis axis, auto&& setters) {
    if (!axes.count(axis)) return;
    std::vector<TrainConfig> next;
    for (const auto& c : cells) {
      for (const auto& set : setters) {
        TrainConfig copy = c;
        set(copy);
        next.push_back(copy);
      }
    }
    cells = std::move(next);
  };
  using Setter = std::function<void(TrainConfig&)>;
  expand(AblationAxis::kEncoderPolicy,
         std::vector<Setter>{[](TrainConfig& c) { c.encoder_policy = EncoderPolicy::kLastBlockOnly; },
                             [](TrainConfig& c) { c.encoder_policy = EncoderPolicy::kNone; }});
  expand(AblationAxis::kGraphType,
         std::vector<Setter>{[](TrainConfig& c) { c.directed = true; },
                             [](TrainConfig& c) { c.directed = false; }});
  expand(AblationAxis::kGnnKind,
         std::vector<Setter>{[](TrainConfig& c) { c.gnn = GnnKind::kGcn; },
                             [](TrainConfig& c) { c.gnn = GnnKind::kGat; }});
  expand(AblationAxis::kResidual,
         std::vector<Setter>{[](TrainConfig& c) { c.residual = true; },
                             [](TrainConfig& c) { c.residual = false; }});
  return cells;
}

inline std::string cell_label(const TrainConfig& c) {
  return std::string(c.encoder_policy == EncoderPolicy::kNone ? "w/o train" : "w/ train") +
         " | " + (c.directed ? "directed" : "undirected") + " | " + to_string(c.gnn) +
         (c.residual ? "+rc" : "");
}

/// Trains one model per cell with the base seed and split and scores the
/// test split. Cells are independent; `jobs` > 1 runs them on threads.
inline std::vector<AblationRow> run_ablation(const Dataset& ds, const TrainConfig& base,
                                             const std::set<AblationAxis>& axes,
                                             std::size_t jobs = 1) {
  const auto cells = ablation_cells(base, axes);
  std::vector<AblationRow> rows(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < cells.size();) {
      try {
        rows[i] = {cells[i], train_and_evaluate(ds, cells[i]).test};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, cells.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i]) continue;
    const std::string where = "ablation cell '" + cell_label(cells[i]) + "': ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    } catch (const Error& e) {
      throw Error(where + e.what());
    }
  }
  return rows;
}

inline std::vector<nlohmann::json> ablation_rows(const std::vector<AblationRow>& rows) {
  std::vector<nlohmann::json> out;
  for (const auto& r : rows) {
    nlohmann::json j{{"encoder_train", to_string(r.config.encoder_policy)},
                     {"graph", r.config.directed ? "directed" : "undirected"},
                     {"gnn", to_string(r.config.gnn)},
                     {"residual", r.config.residual}};
    for (const auto& tax : map_rows(r.test)) {
      nlohmann::json values = tax;
      values.erase("taxonomy");
      j[tax["taxonomy"].get<std::string>()] = values;
    }
    out.push_back(std::move(j));
  }
  return out;
}

inline std::string ablation_table(const std::vector<AblationRow>& rows) {
  if (rows.empty()) return {};
  std::vector<std::string> header{"encoder", "graph", "model"};
  for (const char* tax : {"TOPIX17", "TOPIX33"}) {
    for (auto k : rows.front().test.ks) {
      header.push_back(std::string(tax) + " MAP@" + std::to_string(k));
    }
  }
  TextTable table(header);
  for (const auto& r : rows) {
    std::vector<std::string> line{
        r.config.encoder_policy == EncoderPolicy::kNone ? "w/o train" : "w/ train",
        r.config.directed ? "directed" : "undirected",
        to_string(r.config.gnn) + (r.config.residual ? "+rc" : "")};
    for (double v : r.test.sector) line.push_back(fixed6(v));
    for (double v : r.test.industry) line.push_back(fixed6(v));
    table.add(line);
  }
  return table.render();
}

}  // namespace setn
