#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "setn/core/errors.hpp"

namespace setn {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Seeded shuffle, then contiguous cut. Validation and test sizes are
/// rounded to nearest; train takes the remainder.
inline Split split_dataset(std::vector<std::size_t> ids,
                           const std::array<double, 3>& proportions,
                           std::uint64_t seed) {
  if (ids.empty()) throw ParameterError("split_dataset: empty id list");
  double sum = 0.0;
  for (double p : proportions) {
    if (!(p > 0.0)) throw ParameterError("split_dataset: proportions must be positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ParameterError("split_dataset: proportions must sum to 1");
  }
  const double n = static_cast<double>(ids.size());
  const auto n_val = static_cast<std::size_t>(std::llround(proportions[1] * n));
  const auto n_test = static_cast<std::size_t>(std::llround(proportions[2] * n));
  if (n_val == 0 || n_test == 0 || n_val + n_test >= ids.size()) {
    throw ParameterError("split_dataset: " + std::to_string(ids.size()) +
                         " ids leave an empty split");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const std::size_t n_train = ids.size() - n_val - n_test;
  Split s;
  s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                      ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
  return s;
}

}  // namespace setn
