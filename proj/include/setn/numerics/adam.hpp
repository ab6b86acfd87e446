#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "setn/core/errors.hpp"
#include "setn/numerics/tensor.hpp"

namespace setn {

/// Adam hyperparameters. Betas and epsilon are the customary defaults; the
/// learning rate default matches the SETN training setup.
struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment buffers, one pair per parameter, sized lazily on the first step.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : config(cfg) {}
};

/// One bias-corrected Adam update on a single flat buffer. `step` is the
/// already-incremented (1-based) step number.
inline void adam_update(std::span<double> param, std::span<const double> grad,
                        std::span<double> m, std::span<double> v,
                        const AdamConfig& cfg, std::uint64_t step) {
  if (param.size() != grad.size() || m.size() != param.size() ||
      v.size() != param.size()) {
    throw DimensionError("adam: parameter of " + std::to_string(param.size()) +
                         " entries paired with gradient of " +
                         std::to_string(grad.size()));
  }
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

/// Applies one Adam step to every parameter using its accumulated gradient.
/// Parameters without a gradient buffer are treated as having zero gradient.
inline void adam_step(std::span<Tensor> params, AdamState& state) {
  if (state.step == 0 && state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam: state tracks " +
                         std::to_string(state.first_moment.size()) +
                         " parameters, step received " +
                         std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].size()) {
      throw DimensionError("adam: moment buffer " + std::to_string(i) +
                           " does not match parameter shape " +
                           shape_string(params[i].shape()));
    }
  }
  ++state.step;
  std::vector<double> zeros;
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::span<const double> grad = params[i].grad();
    if (grad.empty()) {
      zeros.assign(params[i].size(), 0.0);
      grad = zeros;
    }
    adam_update(params[i].mutable_data(), grad, state.first_moment[i],
                state.second_moment[i], state.config, state.step);
  }
}

}  // namespace setn
