#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "setn/core/errors.hpp"
#include "setn/data/taxonomy.hpp"

namespace setn {

/// One listed company: its business description and both taxonomy labels.
struct StockRecord {
  std::size_t id = 0;
  std::string ticker;
  std::string text;
  std::size_t sector = 0;    // TOPIX17 class id
  std::size_t industry = 0;  // TOPIX33 class id
};

struct NodeTable {
  std::vector<StockRecord> records;
  std::unordered_map<std::string, std::size_t> id_of_ticker;
};

/// nodes.jsonl, one object per line:
///   {"ticker": ..., "text": ..., "topix17": <sector name>, "topix33": <industry name>}
/// "topix17" may be omitted, in which case the industry's sector is used.
/// Records are numbered densely in file order; blank lines are skipped.
inline NodeTable load_nodes(const std::string& path,
                            const Taxonomy& taxonomy = Taxonomy::topix()) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open node file " + path);
  NodeTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + "malformed JSON: " + e.what());
    }
    if (!j.is_object()) throw DataError(where + "expected a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key != "ticker" && key != "text" && key != "topix17" &&
          key != "topix33") {
        throw DataError(where + "unknown key '" + key + "'");
      }
      if (!value.is_string()) {
        throw DataError(where + "field '" + key + "' must be a string");
      }
    }
    if (!j.contains("ticker") || !j.contains("text") || !j.contains("topix33")) {
      throw DataError(where + "missing one of ticker, text, topix33");
    }
    StockRecord rec;
    rec.id = table.records.size();
    rec.ticker = j["ticker"].get<std::string>();
    rec.text = j["text"].get<std::string>();
    const std::string industry = j["topix33"].get<std::string>();
    auto ind = taxonomy.find_industry(industry);
    if (!ind) throw DataError(where + "unknown TOPIX33 label '" + industry + "'");
    rec.industry = *ind;
    if (j.contains("topix17")) {
      const std::string sector = j["topix17"].get<std::string>();
      auto sec = taxonomy.find_sector(sector);
      if (!sec) throw DataError(where + "unknown TOPIX17 label '" + sector + "'");
      rec.sector = *sec;
    } else {
      rec.sector = taxonomy.sector_of(rec.industry);
    }
    if (!table.id_of_ticker.emplace(rec.ticker, rec.id).second) {
      throw DataError(where + "duplicate ticker '" + rec.ticker + "'");
    }
    table.records.push_back(std::move(rec));
  }
  return table;
}

inline void save_nodes(const std::vector<StockRecord>& records,
                       const Taxonomy& taxonomy, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write node file " + path);
  for (const auto& r : records) {
    nlohmann::json j = {{"ticker", r.ticker},
                        {"text", r.text},
                        {"topix17", taxonomy.sector_name(r.sector)},
                        {"topix33", taxonomy.industry_name(r.industry)}};
    out << j.dump() << '\n';
  }
}

struct TaxonomyViolation {
  std::size_t stock_id = 0;
  std::string ticker;
  std::size_t industry = 0;
  std::size_t sector = 0;
  std::size_t expected_sector = 0;
};

/// Records whose TOPIX33 industry does not belong to their TOPIX17 sector.
/// Violations are data, not faults: the caller decides what to do.
inline std::vector<TaxonomyViolation> validate_taxonomy(
    const std::vector<StockRecord>& records, const Taxonomy& taxonomy) {
  std::vector<TaxonomyViolation> out;
  for (const auto& r : records) {
    if (r.industry >= taxonomy.num_industries() ||
        r.sector >= taxonomy.num_sectors()) {
      out.push_back({r.id, r.ticker, r.industry, r.sector, r.sector});
      continue;
    }
    const std::size_t expected = taxonomy.sector_of(r.industry);
    if (expected != r.sector) {
      out.push_back({r.id, r.ticker, r.industry, r.sector, expected});
    }
  }
  return out;
}

/// Named group of stocks sharing an investment theme.
struct Theme {
  std::string name;
  std::vector<std::size_t> members;
};

struct ThemeSet {
  std::vector<Theme> themes;
  std::size_t dropped = 0;  // themes below the size threshold
};

struct RawTheme {
  std::string name;
  std::vector<std::string> tickers;
};

/// themes.jsonl: {"theme": <name>, "members": [<ticker>, ...]} per line.
inline std::vector<RawTheme> parse_themes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open theme file " + path);
  std::vector<RawTheme> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    try {
      auto j = nlohmann::json::parse(line);
      RawTheme t;
      t.name = j.at("theme").get<std::string>();
      t.tickers = j.at("members").get<std::vector<std::string>>();
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + "malformed theme line: " + e.what());
    }
  }
  return out;
}

inline void save_themes(const std::vector<RawTheme>& themes,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write theme file " + path);
  for (const auto& t : themes) {
    out << nlohmann::json{{"theme", t.name}, {"members", t.tickers}}.dump()
        << '\n';
  }
}

/// Keeps members present in `universe` (ticker → stock id), deduplicated in
/// first-seen order, and drops themes with fewer than max(min_members, 2)
/// surviving members.
inline ThemeSet build_theme_set(
    const std::vector<RawTheme>& raw,
    const std::unordered_map<std::string, std::size_t>& universe,
    std::size_t min_members) {
  ThemeSet set;
  const std::size_t floor = std::max<std::size_t>(min_members, 2);
  for (const auto& t : raw) {
    Theme theme{t.name, {}};
    std::unordered_set<std::size_t> seen;
    for (const auto& ticker : t.tickers) {
      auto it = universe.find(ticker);
      if (it != universe.end() && seen.insert(it->second).second) {
        theme.members.push_back(it->second);
      }
    }
    if (theme.members.size() >= floor) {
      set.themes.push_back(std::move(theme));
    } else {
      ++set.dropped;
    }
  }
  return set;
}

inline ThemeSet load_themes(
    const std::string& path,
    const std::unordered_map<std::string, std::size_t>& universe,
    std::size_t min_members) {
  return build_theme_set(parse_themes(path), universe, min_members);
}

}  // namespace setn
