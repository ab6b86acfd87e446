#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "setn/core/errors.hpp"

namespace setn {

inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kUnkId = 1;
inline constexpr std::size_t kClsId = 2;
inline constexpr std::size_t kReservedIds = 3;
/// Business descriptions are cut to their first 512 tokens, CLS included.
inline constexpr std::size_t kMaxTokens = 512;

/// Token string → dense id. Ids 0–2 are PAD, UNK and CLS.
class Vocab {
 public:
  Vocab() : tokens_{"[PAD]", "[UNK]", "[CLS]"} {}

  /// Words are assigned ids 3, 4, ... in the given order; repeats are ignored.
  static Vocab from_words(const std::vector<std::string>& words) {
    Vocab vocab;
    for (const auto& w : words) vocab.add(w);
    return vocab;
  }

  /// vocab.txt: one token per line; line i (0-based) gets id i + 3.
  static Vocab load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vocabulary file " + path);
    Vocab vocab;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) {
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": empty vocabulary entry");
      }
      if (vocab.ids_.contains(line)) {
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": duplicate token '" + line + "'");
      }
      vocab.add(line);
    }
    return vocab;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write vocabulary file " + path);
    for (std::size_t id = kReservedIds; id < tokens_.size(); ++id) {
      out << tokens_[id] << '\n';
    }
  }

  std::size_t add(const std::string& token) {
    auto [it, inserted] = ids_.try_emplace(token, tokens_.size());
    if (inserted) tokens_.push_back(token);
    return it->second;
  }

  std::size_t size() const { return tokens_.size(); }

  std::size_t id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnkId : it->second;
  }

  const std::string& token(std::size_t id) const { return tokens_.at(id); }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
};

/// Token ids of one document; always starts with CLS.
struct TokenSequence {
  std::vector<std::size_t> ids{kClsId};

  std::size_t size() const { return ids.size(); }
};

inline std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Every distinct lowercased word of the texts, in sorted order, so the
/// same corpus always yields the same ids.
inline Vocab vocab_from_corpus(const std::vector<std::string>& texts) {
  std::set<std::string> words;
  for (const auto& text : texts) {
    std::istringstream in{text};
    std::string w;
    while (in >> w) words.insert(to_lower(w));
  }
  return Vocab::from_words({words.begin(), words.end()});
}

/// Whitespace split, lowercase, vocabulary lookup with UNK fallback, CLS
/// prepended, cut to max_tokens total.
inline TokenSequence tokenize(std::string_view text, const Vocab& vocab,
                              std::size_t max_tokens = kMaxTokens) {
  if (vocab.size() <= kReservedIds) {
    throw ContractError("tokenize: vocabulary has no entries");
  }
  if (max_tokens == 0) throw ParameterError("tokenize: max_tokens must be > 0");
  TokenSequence seq;
  std::istringstream words{std::string(text)};
  std::string word;
  while (seq.ids.size() < max_tokens && words >> word) {
    seq.ids.push_back(vocab.id(to_lower(word)));
  }
  return seq;
}

}  // namespace setn
