#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "setn/eval/metrics.hpp"

namespace setn {

/// Reported numbers are rounded once, here, so JSON and text agree.
inline double round6(double v) { return std::round(v * 1e6) / 1e6; }

inline std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", round6(v));
  return buf;
}

/// Left-aligned first column, right-aligned others.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) { rows_.push_back(std::move(header)); }

  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string render() const {
    std::vector<std::size_t> width;
    for (const auto& r : rows_) {
      if (width.size() < r.size()) width.resize(r.size(), 0);
      for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    std::string out;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const auto& r = rows_[i];
      for (std::size_t c = 0; c < r.size(); ++c) {
        const std::string pad(width[c] - r[c].size(), ' ');
        if (c) out += "  ";
        out += c == 0 ? r[c] + pad : pad + r[c];
      }
      out += '\n';
      if (i == 0) {
        std::size_t total = 0;
        for (std::size_t w : width) total += w;
        out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
      }
    }
    return out;
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

/// One JSON row per taxonomy: {"taxonomy": "TOPIX17", "map@5": ..., ...}.
inline std::vector<nlohmann::json> map_rows(const TaxonomyMap& m) {
  std::vector<nlohmann::json> rows;
  for (int t = 0; t < 2; ++t) {
    nlohmann::json row{{"taxonomy", t == 0 ? "TOPIX17" : "TOPIX33"}};
    const auto& values = t == 0 ? m.sector : m.industry;
    for (std::size_t i = 0; i < m.ks.size(); ++i) {
      row["map@" + std::to_string(m.ks[i])] = round6(values[i]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string map_table(const TaxonomyMap& m) {
  std::vector<std::string> header{"taxonomy"};
  for (auto k : m.ks) header.push_back("MAP@" + std::to_string(k));
  TextTable table(header);
  for (int t = 0; t < 2; ++t) {
    std::vector<std::string> row{t == 0 ? "TOPIX17" : "TOPIX33"};
    for (double v : t == 0 ? m.sector : m.industry) row.push_back(fixed6(v));
    table.add(row);
  }
  return table.render();
}

inline std::vector<nlohmann::json> theme_rows(const ThemeReport& r) {
  std::vector<nlohmann::json> rows;
  for (const auto& t : r.themes) {
    rows.push_back({{"theme", t.name},
                    {"size", t.size},
                    {"metric", round6(t.value)},
                    {"random_guess", round6(t.random_guess)}});
  }
  rows.push_back({{"theme", "overall"},
                  {"size", r.themes.size()},
                  {"metric", round6(r.overall)},
                  {"random_guess", round6(r.random_guess)}});
  return rows;
}

inline std::string theme_table(const ThemeReport& r) {
  TextTable table({"theme", "size", "metric", "random guess"});
  for (const auto& t : r.themes) {
    table.add({t.name, std::to_string(t.size), fixed6(t.value), fixed6(t.random_guess)});
  }
  table.add({"overall", std::to_string(r.themes.size()), fixed6(r.overall),
             fixed6(r.random_guess)});
  return table.render();
}

}  // namespace setn
