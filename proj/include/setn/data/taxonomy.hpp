#pragma once

#include <cctype>
#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "setn/core/errors.hpp"

namespace setn {

/// Lowercase alphanumerics only; "IT & Services, Others" and
/// "IT&SERVICES, OTHERS" compare equal.
inline std::string normalize_label(std::string_view name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

/// Two-level sector/industry classification: every industry belongs to
/// exactly one sector.
class Taxonomy {
 public:
  Taxonomy() = default;

  /// Throws DataError on duplicate names or an unknown sector reference.
  Taxonomy(std::vector<std::string> sectors,
           std::vector<std::pair<std::string, std::string>> industries) {
    for (std::size_t i = 0; i < sectors.size(); ++i) {
      if (!sector_index_.emplace(normalize_label(sectors[i]), i).second) {
        throw DataError("taxonomy: duplicate sector '" + sectors[i] + "'");
      }
    }
    sectors_ = std::move(sectors);
    for (std::size_t i = 0; i < industries.size(); ++i) {
      const auto& [name, sector] = industries[i];
      if (!industry_index_.emplace(normalize_label(name), i).second) {
        throw DataError("taxonomy: duplicate industry '" + name + "'");
      }
      auto s = find_sector(sector);
      if (!s) {
        throw DataError("taxonomy: industry '" + name +
                        "' maps to unknown sector '" + sector + "'");
      }
      industries_.push_back(name);
      industry_sector_.push_back(*s);
    }
  }

  /// TOPIX17 sectors and TOPIX33 industries of the Tokyo Stock Exchange,
  /// names as published (including the "PHAMACEUTICAL" and
  /// "ELECTRIC POWERT&GAS" spellings; corrected spellings resolve too).
  static const Taxonomy& topix() {
    static const Taxonomy t = [] {
      std::vector<std::pair<std::string, std::vector<std::string>>> table = {
          {"FOODS", {"Fishery, Agriculture & Forestry", "Foods"}},
          {"ENERGY RESOURCES", {"Mining", "Oil and Coal Products"}},
          {"CONSTRUCTION&MATERIALS",
           {"Construction", "Metal Products", "Glass and Ceramics Products"}},
          {"RAW MATERIALS&CHEMICALS",
           {"Textiles and Apparels", "Pulp and Paper", "Chemicals"}},
          {"PHAMACEUTICAL", {"Pharmaceutical"}},
          {"AUTOMOBILES&TRANSPORTATION EQUIPMENT",
           {"Rubber Products", "Transportation Equipment"}},
          {"STEEL&NONFERROUS METALS", {"Iron and Steel", "Nonferrous Metals"}},
          {"MACHINERY", {"Machinery"}},
          {"ELECTRIC APPLIANCES&PRECISION INSTRUMENTS",
           {"Electric Appliances", "Precision Instruments"}},
          {"IT&SERVICES, OTHERS",
           {"Other Products", "Information & Communication", "Services"}},
          {"ELECTRIC POWERT&GAS", {"Electric Power and Gas"}},
          {"TRANSPORTATION&LOGISTICS",
           {"Land Transportation", "Marine Transportation",
            "Air Transportation", "Warehousing and Harbor Transportation"}},
          {"COMMERCIAL&WHOLESALE TRADE", {"Wholesale Trade"}},
          {"RETAIL TRADE", {"Retail Trade"}},
          {"BANKS", {"Banks"}},
          {"FINANCIAL(EXCEPT BANKS)",
           {"Securities and Commodities Futures", "Insurance",
            "Other Financing Business"}},
          {"REAL ESTATE", {"Real Estate"}},
      };
      std::vector<std::string> sectors;
      std::vector<std::pair<std::string, std::string>> industries;
      for (const auto& [sector, members] : table) {
        sectors.push_back(sector);
        for (const auto& m : members) industries.emplace_back(m, sector);
      }
      Taxonomy tax(std::move(sectors), std::move(industries));
      tax.add_sector_alias("PHARMACEUTICAL", "PHAMACEUTICAL");
      tax.add_sector_alias("ELECTRIC POWER&GAS", "ELECTRIC POWERT&GAS");
      return tax;
    }();
    return t;
  }

  std::size_t num_sectors() const { return sectors_.size(); }
  std::size_t num_industries() const { return industries_.size(); }
  const std::vector<std::string>& sectors() const { return sectors_; }
  const std::vector<std::string>& industries() const { return industries_; }
  const std::string& sector_name(std::size_t id) const { return sectors_.at(id); }
  const std::string& industry_name(std::size_t id) const {
    return industries_.at(id);
  }
  std::size_t sector_of(std::size_t industry) const {
    return industry_sector_.at(industry);
  }

  std::optional<std::size_t> find_sector(std::string_view name) const {
    auto it = sector_index_.find(normalize_label(name));
    if (it == sector_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> find_industry(std::string_view name) const {
    auto it = industry_index_.find(normalize_label(name));
    if (it == industry_index_.end()) return std::nullopt;
    return it->second;
  }

  /// True when both names resolve and the industry belongs to the sector.
  bool consistent(std::string_view industry, std::string_view sector) const {
    auto i = find_industry(industry);
    auto s = find_sector(sector);
    return i && s && sector_of(*i) == *s;
  }

  void add_sector_alias(std::string_view alias, std::string_view canonical) {
    auto id = find_sector(canonical);
    if (!id) throw DataError("alias target '" + std::string(canonical) + "' unknown");
    sector_index_.emplace(normalize_label(alias), *id);
  }

  nlohmann::json to_json() const {
    nlohmann::json industries = nlohmann::json::array();
    for (std::size_t i = 0; i < industries_.size(); ++i) {
      industries.push_back(
          {{"name", industries_[i]}, {"sector", sectors_[industry_sector_[i]]}});
    }
    return {{"sectors", sectors_}, {"industries", industries}};
  }

  static Taxonomy from_json(const nlohmann::json& j) {
    try {
      std::vector<std::string> sectors = j.at("sectors");
      std::vector<std::pair<std::string, std::string>> industries;
      for (const auto& entry : j.at("industries")) {
        industries.emplace_back(entry.at("name").get<std::string>(),
                                entry.at("sector").get<std::string>());
      }
      return Taxonomy(std::move(sectors), std::move(industries));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("taxonomy: malformed document: ") + e.what());
    }
  }

  static Taxonomy load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open taxonomy file " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ": " + e.what());
    }
    return from_json(j);
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write taxonomy file " + path);
    out << to_json().dump(2) << '\n';
  }

 private:
  std::vector<std::string> sectors_;
  std::vector<std::string> industries_;
  std::vector<std::size_t> industry_sector_;
  std::unordered_map<std::string, std::size_t> sector_index_;
  std::unordered_map<std::string, std::size_t> industry_index_;
};

}  // namespace setn
