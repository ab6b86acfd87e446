#pragma once

// Command-line front end. Kept in a header so tests can drive run() with
// in-memory streams.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "setn/setn.hpp"

namespace setn::cli {

enum ExitCode { kOk = 0, kDataFailure = 1, kUsage = 2 };

/// Raised for inconsistent or missing arguments; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Flags {
  std::string config;
  std::optional<std::string> nodes, edges, themes, vocab, taxonomy, out, model;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> k, gnn, residual, graph, encoder_train, pooling;
  std::optional<std::size_t> epochs, min_theme_size;
  bool include_self = false;

  // synth
  SyntheticSpec synth;

  // ablate
  std::string axes;
  std::size_t jobs = 1;

  // embed
  std::string format = "tsv";
  std::string universe = "all";
};

inline std::vector<std::size_t> parse_k_list(const std::string& s) {
  std::vector<std::size_t> ks;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(item, &used);
      if (used != item.size() || v == 0) throw std::invalid_argument(item);
      ks.push_back(v);
    } catch (const std::logic_error&) {
      throw UsageError("--k: '" + item + "' is not a positive integer");
    }
  }
  if (ks.empty()) throw UsageError("--k: empty list");
  return ks;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

/// Effective configuration: `base`, then the config file, then flags.
inline RunConfig effective_config(RunConfig base, const Flags& f) {
  try {
    if (!f.config.empty()) base = apply_json(base, read_json_file(f.config));
    auto& c = base.train;
    auto& p = base.paths;
    if (f.nodes) p.nodes = *f.nodes;
    if (f.edges) p.edges = *f.edges;
    if (f.themes) p.themes = *f.themes;
    if (f.vocab) p.vocab = *f.vocab;
    if (f.taxonomy) p.taxonomy = *f.taxonomy;
    if (f.out) p.out = *f.out;
    if (f.model) p.model = *f.model;
    if (f.seed) c.seed = *f.seed;
    if (f.k) c.ks = parse_k_list(*f.k);
    if (f.gnn) c.gnn = parse_gnn(*f.gnn);
    if (f.residual) c.residual = *f.residual == "on";
    if (f.graph) c.directed = *f.graph == "directed";
    if (f.encoder_train) c.encoder_policy = parse_policy(*f.encoder_train);
    if (f.pooling) c.pooling = parse_pooling(*f.pooling);
    if (f.epochs) c.epochs = *f.epochs;
    if (f.min_theme_size) c.min_theme_size = *f.min_theme_size;
    if (f.include_self) c.theme_include_self = true;
    c.validate();
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  return base;
}

inline const std::string& require_path(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required ") + flag);
  return value;
}

struct LoadedData {
  Taxonomy taxonomy;
  NodeTable nodes;
  Dataset dataset;
};

inline LoadedData load_data(const RunConfig& rc, spdlog::logger& log) {
  LoadedData d;
  d.taxonomy = rc.paths.taxonomy.empty() ? Taxonomy::topix()
                                         : Taxonomy::load(rc.paths.taxonomy);
  d.nodes = load_nodes(require_path(rc.paths.nodes, "--nodes"), d.taxonomy);
  if (d.nodes.records.empty()) throw DataError(rc.paths.nodes + ": no stocks");
  const auto violations = validate_taxonomy(d.nodes.records, d.taxonomy);
  if (!violations.empty()) {
    log.warn("{} stock(s) have an industry outside their sector, first: {}",
             violations.size(), violations.front().ticker);
  }
  EdgeLoadStats stats;
  StockGraph graph =
      load_edges(require_path(rc.paths.edges, "--edges"), d.nodes.records.size(), &stats);
  if (stats.duplicates_dropped || stats.self_loops_dropped) {
    log.warn("edges: dropped {} duplicate(s) and {} self-loop(s)",
             stats.duplicates_dropped, stats.self_loops_dropped);
  }
  Vocab vocab;
  if (rc.paths.vocab.empty()) {
    std::vector<std::string> texts;
    for (const auto& r : d.nodes.records) texts.push_back(r.text);
    vocab = vocab_from_corpus(texts);
  } else {
    vocab = Vocab::load(rc.paths.vocab);
  }
  log.info("loaded {} stocks, {} edges, vocabulary of {}", d.nodes.records.size(),
           graph.num_edges(), vocab.size());
  d.dataset = make_dataset(d.nodes.records, std::move(graph), vocab, d.taxonomy,
                           rc.train.max_tokens);
  return d;
}

inline std::vector<std::size_t> all_ids(std::size_t n) {
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  return ids;
}

/// Loads the checkpoint named by --model, or <out>/model.setn.
inline Checkpoint open_checkpoint(RunConfig& rc) {
  std::string path = rc.paths.model;
  if (path.empty() && !rc.paths.out.empty()) {
    path = (std::filesystem::path(rc.paths.out) / "model.setn").string();
  }
  require_path(path, "--model");
  rc.paths.model = path;
  return load_checkpoint(path);
}

/// Requested architecture settings must match the checkpoint's.
inline void check_architecture(const RunConfig& rc, const ModelConfig& m) {
  if (rc.train.gnn != m.gnn) {
    throw KindMismatchError("checkpoint " + rc.paths.model + " holds a " +
                            to_string(m.gnn) + " model, " + to_string(rc.train.gnn) +
                            " was requested");
  }
  if (rc.train.residual != m.residual || rc.train.pooling != m.pooling ||
      rc.train.encoder_policy != m.encoder_policy) {
    throw KindMismatchError("checkpoint " + rc.paths.model +
                            " was trained with different residual, pooling or "
                            "encoder settings than requested");
  }
}

inline void emit(std::ostream& out, const nlohmann::json& row) { out << row.dump() << '\n'; }

inline int cmd_synth(const Flags& f, std::ostream& out, std::ostream& err,
                     spdlog::logger& log) {
  const std::string dir = require_path(f.out.value_or(""), "--out");
  SyntheticSpec spec = f.synth;
  if (f.seed) spec.seed = *f.seed;
  try {
    check_feasible(spec);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  const nlohmann::json config{
      {"n", spec.num_stocks},
      {"sectors", spec.num_sectors},
      {"industries", spec.num_industries},
      {"vocab_size", spec.vocab_size},
      {"tokens_per_doc", spec.tokens_per_doc},
      {"graph_model", spec.graph_model == GraphModel::kPlantedInEdges ? "planted" : "sbm"},
      {"in_degree", spec.in_degree},
      {"text_signal", round6(spec.text_signal)},
      {"graph_signal", round6(spec.graph_signal)},
      {"direction_signal", round6(spec.direction_signal)},
      {"theme_count", spec.theme_count},
      {"theme_size", spec.theme_size},
      {"seed", spec.seed},
      {"out", dir}};
  emit(out, {{"config", config}});
  const auto ds = generate_synthetic(spec);
  save_dataset(ds, dir);
  log.info("wrote synthetic dataset to {}", dir);
  const nlohmann::json summary{{"stocks", ds.records.size()},
                               {"edges", ds.graph.num_edges()},
                               {"themes", ds.themes.size()},
                               {"vocab", ds.vocab.size()}};
  emit(out, summary);
  TextTable table({"stocks", "edges", "themes", "vocab"});
  table.add({std::to_string(ds.records.size()), std::to_string(ds.graph.num_edges()),
             std::to_string(ds.themes.size()), std::to_string(ds.vocab.size())});
  err << table.render();
  return kOk;
}

inline int cmd_train(const Flags& f, std::ostream& out, std::ostream& err,
                     spdlog::logger& log) {
  RunConfig rc = effective_config({}, f);
  const std::string dir = require_path(rc.paths.out, "--out");
  emit(out, {{"config", to_json(rc)}});
  auto data = load_data(rc, log);
  std::filesystem::create_directories(dir);
  const auto log_path = (std::filesystem::path(dir) / "train_log.jsonl").string();
  std::ofstream train_log(log_path, std::ios::binary);
  if (!train_log) throw DataError("cannot write " + log_path);

  TextTable table({"epoch", "train loss", "val MAP@5 TOPIX17", "val MAP@5 TOPIX33"});
  auto on_epoch = [&](const EpochLog& e) {
    nlohmann::json row{{"epoch", e.epoch}, {"train_loss", round6(e.train_loss)}};
    row["val_map@5_topix17"] =
        e.val_map5_sector ? nlohmann::json(round6(*e.val_map5_sector)) : nlohmann::json();
    row["val_map@5_topix33"] = e.val_map5_industry
                                   ? nlohmann::json(round6(*e.val_map5_industry))
                                   : nlohmann::json();
    emit(out, row);
    emit(train_log, row);
    table.add({std::to_string(e.epoch), fixed6(e.train_loss),
               e.val_map5_sector ? fixed6(*e.val_map5_sector) : "-",
               e.val_map5_industry ? fixed6(*e.val_map5_industry) : "-"});
    log.info("epoch {} loss {:.6f}", e.epoch, e.train_loss);
  };
  const RunResult result = train_and_evaluate(data.dataset, rc.train, on_epoch);
  const auto model_path = (std::filesystem::path(dir) / "model.setn").string();
  save_model(result.model, model_path, rc.train);
  nlohmann::json summary{{"model", model_path}};
  for (const auto& row : map_rows(result.test)) {
    summary["test_" + row["taxonomy"].get<std::string>()] = row;
  }
  emit(out, summary);
  err << table.render() << "\ntest split\n" << map_table(result.test);
  return kOk;
}

/// Checkpoint, data and the configured test split shared by the eval
/// commands.
struct EvalContext {
  RunConfig rc;
  Checkpoint checkpoint;
  LoadedData data;
  std::vector<std::size_t> test_ids;
};

inline EvalContext open_eval(const Flags& f, spdlog::logger& log) {
  // First pass only locates the checkpoint; its training settings then
  // become the base under the config file and flags.
  RunConfig located = effective_config({}, f);
  EvalContext ctx;
  ctx.checkpoint = open_checkpoint(located);
  RunConfig base;
  base.train = ctx.checkpoint.training;
  base.paths = located.paths;
  ctx.rc = effective_config(base, f);
  ctx.rc.paths.model = located.paths.model;
  const auto& m = ctx.checkpoint.model.config;
  check_architecture(ctx.rc, m);
  ctx.rc.train.max_tokens = m.max_tokens;
  ctx.data = load_data(ctx.rc, log);
  if (ctx.data.dataset.vocab_size != m.vocab_size) {
    throw DataError("vocabulary has " + std::to_string(ctx.data.dataset.vocab_size) +
                    " entries, the checkpoint expects " + std::to_string(m.vocab_size));
  }
  if (ctx.data.taxonomy.num_sectors() != m.num_sectors ||
      ctx.data.taxonomy.num_industries() != m.num_industries) {
    throw DataError("taxonomy size differs from the checkpoint's");
  }
  try {
    ctx.test_ids = split_dataset(all_ids(ctx.data.dataset.records.size()),
                                 ctx.rc.train.split, ctx.rc.train.seed)
                       .test;
  } catch (const ParameterError& e) {
    throw DataError(e.what());
  }
  return ctx;
}

inline int cmd_eval_map(const Flags& f, std::ostream& out, std::ostream& err,
                        spdlog::logger& log) {
  EvalContext ctx = open_eval(f, log);
  emit(out, {{"config", to_json(ctx.rc)}});
  const auto graph = working_graph(ctx.data.dataset, ctx.rc.train);
  const auto e = embed_ids(ctx.checkpoint.model, ctx.data.dataset, graph, ctx.test_ids);
  const auto m = map_by_taxonomy(e, ctx.data.dataset.records, ctx.rc.train.ks);
  for (const auto& row : map_rows(m)) emit(out, row);
  err << map_table(m);
  return kOk;
}

inline int cmd_eval_theme(const Flags& f, std::ostream& out, std::ostream& err,
                          spdlog::logger& log) {
  EvalContext ctx = open_eval(f, log);
  const std::string themes_path = require_path(ctx.rc.paths.themes, "--themes");
  emit(out, {{"config", to_json(ctx.rc)}});
  std::unordered_map<std::string, std::size_t> universe;
  for (std::size_t id : ctx.test_ids) {
    universe.emplace(ctx.data.dataset.records[id].ticker, id);
  }
  const ThemeSet themes =
      load_themes(themes_path, universe, ctx.rc.train.min_theme_size);
  if (themes.dropped) {
    log.warn("{} theme(s) dropped: fewer than {} members in the test split",
             themes.dropped, ctx.rc.train.min_theme_size);
  }
  if (themes.themes.empty()) {
    throw DataError("no theme has at least " + std::to_string(ctx.rc.train.min_theme_size) +
                    " members in the test split");
  }
  const auto graph = working_graph(ctx.data.dataset, ctx.rc.train);
  const auto e = embed_ids(ctx.checkpoint.model, ctx.data.dataset, graph, ctx.test_ids);
  const auto report = theme_metric(e, themes, ctx.rc.train.theme_include_self);
  for (const auto& row : theme_rows(report)) emit(out, row);
  err << theme_table(report);
  return kOk;
}

inline int cmd_embed(const Flags& f, std::ostream& out, std::ostream& err,
                     spdlog::logger& log) {
  if (f.format != "tsv" && f.format != "binary") {
    throw UsageError("--format must be tsv or binary");
  }
  if (f.universe != "all" && f.universe != "test") {
    throw UsageError("--universe must be all or test");
  }
  Flags model_flags = f;
  model_flags.out.reset();  // --out names the embedding file here
  EvalContext ctx = open_eval(model_flags, log);
  const std::string path = require_path(f.out.value_or(""), "--out");
  nlohmann::json config = to_json(ctx.rc);
  config["out"] = path;
  config["format"] = f.format;
  config["universe"] = f.universe;
  emit(out, {{"config", config}});
  const auto ids =
      f.universe == "all" ? all_ids(ctx.data.dataset.records.size()) : ctx.test_ids;
  const auto graph = working_graph(ctx.data.dataset, ctx.rc.train);
  const auto e = embed_ids(ctx.checkpoint.model, ctx.data.dataset, graph, ids);
  export_embeddings(e, path,
                    f.format == "tsv" ? EmbeddingFormat::kTsv : EmbeddingFormat::kBinary);
  emit(out, {{"path", path}, {"rows", e.rows()}, {"dim", e.dim()}});
  TextTable table({"path", "rows", "dim"});
  table.add({path, std::to_string(e.rows()), std::to_string(e.dim())});
  err << table.render();
  return kOk;
}

inline int cmd_ablate(const Flags& f, std::ostream& out, std::ostream& err,
                      spdlog::logger& log) {
  RunConfig rc = effective_config({}, f);
  std::set<AblationAxis> axes;
  std::stringstream in(f.axes);
  std::string item;
  try {
    while (std::getline(in, item, ',')) axes.insert(parse_axis(item));
    if (axes.empty()) throw ParameterError("--axes: no axis given");
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  nlohmann::json config = to_json(rc);
  config["axes"] = f.axes;
  emit(out, {{"config", config}});
  auto data = load_data(rc, log);
  log.info("running {} ablation cell(s)", ablation_cells(rc.train, axes).size());
  const auto rows = run_ablation(data.dataset, rc.train, axes, f.jobs);
  for (const auto& row : ablation_rows(rows)) emit(out, row);
  err << ablation_table(rows);
  return kOk;
}

inline std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("setn", sink);
  logger->set_pattern("[%l] %v");
  const char* env = std::getenv("SETN_LOG");
  const std::string level = env ? env : "error";
  if (level == "debug") logger->set_level(spdlog::level::debug);
  else if (level == "info") logger->set_level(spdlog::level::info);
  else logger->set_level(spdlog::level::err);
  return logger;
}

inline void add_data_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config; flags override its keys");
  cmd->add_option("--nodes", f.nodes, "nodes.jsonl");
  cmd->add_option("--edges", f.edges, "edges.tsv");
  cmd->add_option("--vocab", f.vocab, "vocab.txt (default: built from the node texts)");
  cmd->add_option("--taxonomy", f.taxonomy, "taxonomy.json (default: TOPIX17/33)");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--k", f.k, "comma-separated K list for MAP@K");
}

inline void add_model_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--gnn", f.gnn)->check(CLI::IsMember({"gcn", "gat", "none"}));
  cmd->add_option("--residual", f.residual)->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--graph", f.graph)->check(CLI::IsMember({"directed", "undirected"}));
  cmd->add_option("--encoder-train", f.encoder_train)
      ->check(CLI::IsMember({"all", "last", "none"}));
  cmd->add_option("--pooling", f.pooling)->check(CLI::IsMember({"cls", "mean", "max"}));
  cmd->add_option("--epochs", f.epochs);
}

/// Runs one command line. Exit codes: 0 success, 1 data error, 2 usage error.
inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  Flags f;
  CLI::App app{"Stock embeddings from descriptions and a company graph", "setn"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset directory");
  synth->add_option("--out", f.out, "output directory")->required();
  synth->add_option("--seed", f.seed);
  synth->add_option("--n", f.synth.num_stocks, "number of stocks");
  synth->add_option("--sectors", f.synth.num_sectors);
  synth->add_option("--industries", f.synth.num_industries);
  synth->add_option("--vocab-size", f.synth.vocab_size);
  synth->add_option("--tokens-per-doc", f.synth.tokens_per_doc);
  synth->add_option("--in-degree", f.synth.in_degree);
  synth->add_option("--text-signal", f.synth.text_signal);
  synth->add_option("--graph-signal", f.synth.graph_signal);
  synth->add_option("--direction-signal", f.synth.direction_signal);
  synth->add_option("--theme-count", f.synth.theme_count);
  synth->add_option("--theme-size", f.synth.theme_size);

  auto* train_cmd = app.add_subcommand("train", "fit a model and write a checkpoint");
  add_data_flags(train_cmd, f);
  add_model_flags(train_cmd, f);
  train_cmd->add_option("--out", f.out, "output directory");

  auto* eval_map = app.add_subcommand("eval-map", "MAP@K per taxonomy on the test split");
  add_data_flags(eval_map, f);
  add_model_flags(eval_map, f);
  eval_map->add_option("--model", f.model, "checkpoint (default <out>/model.setn)");
  eval_map->add_option("--out", f.out, "training output directory");

  auto* eval_theme = app.add_subcommand("eval-theme", "theme metric on the test split");
  add_data_flags(eval_theme, f);
  add_model_flags(eval_theme, f);
  eval_theme->add_option("--model", f.model, "checkpoint (default <out>/model.setn)");
  eval_theme->add_option("--out", f.out, "training output directory");
  eval_theme->add_option("--themes", f.themes, "themes.jsonl");
  eval_theme->add_option("--min-theme-size", f.min_theme_size,
                         "smallest theme kept (members in the test split)");
  eval_theme->add_flag("--include-self", f.include_self,
                       "count the query stock among its retrieved neighbors");

  auto* embed = app.add_subcommand("embed", "export stock embeddings");
  add_data_flags(embed, f);
  add_model_flags(embed, f);
  embed->add_option("--model", f.model, "checkpoint")->required();
  embed->add_option("--out", f.out, "embedding file")->required();
  embed->add_option("--format", f.format)->check(CLI::IsMember({"tsv", "binary"}));
  embed->add_option("--universe", f.universe)->check(CLI::IsMember({"all", "test"}));

  auto* ablate = app.add_subcommand("ablate", "train and score an ablation grid");
  add_data_flags(ablate, f);
  add_model_flags(ablate, f);
  ablate->add_option("--axes", f.axes,
                     "comma list of graph_type, encoder_policy, gnn_kind, residual")
      ->required();
  ablate->add_option("--jobs", f.jobs, "parallel cells")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  auto logger = make_logger(err);
  try {
    if (synth->parsed()) return cmd_synth(f, out, err, *logger);
    if (train_cmd->parsed()) return cmd_train(f, out, err, *logger);
    if (eval_map->parsed()) return cmd_eval_map(f, out, err, *logger);
    if (eval_theme->parsed()) return cmd_eval_theme(f, out, err, *logger);
    if (embed->parsed()) return cmd_embed(f, out, err, *logger);
    if (ablate->parsed()) return cmd_ablate(f, out, err, *logger);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataFailure;
  }
  return kUsage;
}

}  // namespace setn::cli
