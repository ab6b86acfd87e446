#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "setn/setn.hpp"

namespace setn::testing {

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

/// Small separable synthetic corpus: few classes, informative texts.
inline SyntheticSpec small_spec(std::size_t n = 80, std::uint64_t seed = 1) {
  SyntheticSpec s;
  s.num_stocks = n;
  s.num_sectors = 2;
  s.num_industries = 4;
  s.vocab_size = 60;
  s.topic_words = 6;
  s.tokens_per_doc = 12;
  s.in_degree = 2;
  s.text_signal = 0.9;
  s.topic_mix = 0.7;
  s.theme_count = 2;
  s.seed = seed;
  return s;
}

inline Dataset to_dataset(const SyntheticDataset& s, std::size_t max_tokens = kMaxTokens) {
  return make_dataset(s.records, s.graph, s.vocab, s.taxonomy, max_tokens);
}

/// Tiny model configuration for fast unit tests.
inline TrainConfig tiny_config() {
  TrainConfig c;
  c.hidden_dim = 8;
  c.ff_dim = 16;
  c.encoder_blocks = 1;
  c.max_tokens = 32;
  c.epochs = 2;
  c.learning_rate = 0.01;
  return c;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("setn-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace setn::testing
