#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "setn/numerics/tensor.hpp"

namespace setn::init {

/// Glorot-uniform matrix [fan_in × fan_out].
template <typename Rng>
Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(fan_in * fan_out);
  for (double& v : values) v = dist(rng);
  return Tensor::from({fan_in, fan_out}, std::move(values), true);
}

template <typename Rng>
Tensor normal(Shape shape, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> values(shape_size(shape));
  for (double& v : values) v = dist(rng);
  return Tensor::from(std::move(shape), std::move(values), true);
}

inline Tensor zeros(Shape shape) { return Tensor::zeros(std::move(shape), true); }

inline Tensor ones(Shape shape) {
  return Tensor::filled(std::move(shape), 1.0, true);
}

}  // namespace setn::init
