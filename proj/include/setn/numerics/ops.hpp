#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "setn/core/errors.hpp"
#include "setn/numerics/tape.hpp"
#include "setn/numerics/tensor.hpp"

// Differentiable primitives. Every op takes the tape it records on; a
// no-grad tape (or inputs without requires_grad) skips recording.
namespace setn::ops {

inline constexpr double kLeakySlope = 0.2;

enum class Activation { kRelu, kLeakyRelu, kSoftmaxRows };

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

// C[n×k] += A[n×m] · B[m×k]
inline void gemm_nn(const double* a, const double* b, double* c, std::size_t n,
                    std::size_t m, std::size_t k) {
  const auto N = static_cast<Eigen::Index>(n), M = static_cast<Eigen::Index>(m),
             K = static_cast<Eigen::Index>(k);
  MutMap(c, N, K).noalias() += ConstMap(a, N, M) * ConstMap(b, M, K);
}

// C[n×m] += A[n×k] · B[m×k]ᵀ
inline void gemm_nt(const double* a, const double* b, double* c, std::size_t n,
                    std::size_t m, std::size_t k) {
  const auto N = static_cast<Eigen::Index>(n), M = static_cast<Eigen::Index>(m),
             K = static_cast<Eigen::Index>(k);
  MutMap(c, N, M).noalias() += ConstMap(a, N, K) * ConstMap(b, M, K).transpose();
}

// C[m×k] += A[n×m]ᵀ · B[n×k]
inline void gemm_tn(const double* a, const double* b, double* c, std::size_t n,
                    std::size_t m, std::size_t k) {
  const auto N = static_cast<Eigen::Index>(n), M = static_cast<Eigen::Index>(m),
             K = static_cast<Eigen::Index>(k);
  MutMap(c, M, K).noalias() += ConstMap(a, N, M).transpose() * ConstMap(b, N, K);
}

inline void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(rank) + ", got shape " +
                         shape_string(t.shape()));
  }
}

inline void accumulate(const Tensor& target, std::span<const double> delta) {
  auto g = target.grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

inline Tensor finished(Tensor out, const char* op) {
  Tensor::check_finite(out.data(), op);
  return out;
}

}  // namespace detail

inline Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  detail::require_rank(a, 2, "matmul");
  detail::require_rank(b, 2, "matmul");
  const std::size_t n = a.dim(0), m = a.dim(1), k = b.dim(1);
  if (b.dim(0) != m) {
    throw DimensionError("matmul: inner dimensions differ for " +
                         shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  Tensor out = Tensor::zeros({n, k});
  detail::gemm_nn(a.data().data(), b.data().data(),
                  out.mutable_data().data(), n, m, k);
  out = detail::finished(out, "matmul");
  if (tape.needs_record(a, b)) {
    tape.record(out, [a, b, out, n, m, k]() mutable {
      const double* g = out.grad().data();
      if (a.requires_grad()) {
        detail::gemm_nt(g, b.data().data(), a.grad_buffer().data(), n, m, k);
      }
      if (b.requires_grad()) {
        detail::gemm_tn(a.data().data(), g, b.grad_buffer().data(), n, m, k);
      }
    });
  }
  return out;
}

/// X[n×d] · W[d×k] + b[k]
inline Tensor linear(Tape& tape, const Tensor& x, const Tensor& w,
                     const Tensor& b) {
  detail::require_rank(x, 2, "linear");
  detail::require_rank(w, 2, "linear");
  detail::require_rank(b, 1, "linear");
  const std::size_t n = x.dim(0), d = x.dim(1), k = w.dim(1);
  if (w.dim(0) != d || b.dim(0) != k) {
    throw DimensionError("linear: shapes X" + shape_string(x.shape()) + ", W" +
                         shape_string(w.shape()) + ", b" +
                         shape_string(b.shape()) + " do not compose");
  }
  Tensor out = Tensor::zeros({n, k});
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(b.data().begin(), b.data().end(), o.begin() + i * k);
  }
  detail::gemm_nn(x.data().data(), w.data().data(), o.data(), n, d, k);
  out = detail::finished(out, "linear");
  if (tape.needs_record(x, w, b)) {
    tape.record(out, [x, w, b, out, n, d, k]() mutable {
      const double* g = out.grad().data();
      if (x.requires_grad()) {
        detail::gemm_nt(g, w.data().data(), x.grad_buffer().data(), n, d, k);
      }
      if (w.requires_grad()) {
        detail::gemm_tn(x.data().data(), g, w.grad_buffer().data(), n, d, k);
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < k; ++j) gb[j] += g[i * k + j];
        }
      }
    });
  }
  return out;
}

inline Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add: shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
  std::vector<double> values(a.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = a[i] + b[i];
  Tensor out = detail::finished(Tensor::from(a.shape(), std::move(values)),
                                "add");
  if (tape.needs_record(a, b)) {
    tape.record(out, [a, b, out]() mutable {
      if (a.requires_grad()) detail::accumulate(a, out.grad());
      if (b.requires_grad()) detail::accumulate(b, out.grad());
    });
  }
  return out;
}

/// X[n×k] + b[k] broadcast over rows.
inline Tensor add_bias(Tape& tape, const Tensor& x, const Tensor& b) {
  detail::require_rank(x, 2, "add_bias");
  const std::size_t n = x.dim(0), k = x.dim(1);
  if (b.rank() != 1 || b.dim(0) != k) {
    throw DimensionError("add_bias: X" + shape_string(x.shape()) + " with b" +
                         shape_string(b.shape()));
  }
  std::vector<double> values(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) values[i * k + j] += b[j];
  }
  Tensor out = detail::finished(Tensor::from(x.shape(), std::move(values)),
                                "add_bias");
  if (tape.needs_record(x, b)) {
    tape.record(out, [x, b, out, n, k]() mutable {
      auto g = out.grad();
      if (x.requires_grad()) detail::accumulate(x, g);
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < k; ++j) gb[j] += g[i * k + j];
        }
      }
    });
  }
  return out;
}

inline Tensor scale(Tape& tape, const Tensor& a, double factor) {
  std::vector<double> values(a.data().begin(), a.data().end());
  for (double& v : values) v *= factor;
  Tensor out = detail::finished(Tensor::from(a.shape(), std::move(values)),
                                "scale");
  if (tape.needs_record(a)) {
    tape.record(out, [a, out, factor]() mutable {
      auto ga = a.grad_buffer();
      auto g = out.grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * g[i];
    });
  }
  return out;
}

inline Tensor reshape(Tape& tape, const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw DimensionError("reshape: " + shape_string(a.shape()) + " to " +
                         shape_string(shape));
  }
  Tensor out = Tensor::from(std::move(shape),
                            std::vector<double>(a.data().begin(), a.data().end()));
  if (tape.needs_record(a)) {
    tape.record(out, [a, out]() mutable { detail::accumulate(a, out.grad()); });
  }
  return out;
}

inline Tensor transpose(Tape& tape, const Tensor& a) {
  detail::require_rank(a, 2, "transpose");
  const std::size_t n = a.dim(0), m = a.dim(1);
  Tensor out = Tensor::zeros({m, n});
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) o[j * n + i] = a[i * m + j];
  }
  if (tape.needs_record(a)) {
    tape.record(out, [a, out, n, m]() mutable {
      auto ga = a.grad_buffer();
      auto g = out.grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += g[j * n + i];
      }
    });
  }
  return out;
}

inline Tensor relu(Tape& tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] > 0.0 ? x[i] : 0.0;
  if (tape.needs_record(x)) {
    tape.record(out, [x, out]() mutable {
      auto gx = x.grad_buffer();
      auto g = out.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        if (x[i] > 0.0) gx[i] += g[i];
      }
    });
  }
  return out;
}

inline Tensor leaky_relu(Tape& tape, const Tensor& x,
                         double slope = kLeakySlope) {
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = x[i] > 0.0 ? x[i] : slope * x[i];
  }
  if (tape.needs_record(x)) {
    tape.record(out, [x, out, slope]() mutable {
      auto gx = x.grad_buffer();
      auto g = out.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        gx[i] += x[i] > 0.0 ? g[i] : slope * g[i];
      }
    });
  }
  return out;
}

/// Row-wise softmax. Entries whose mask byte is zero get probability 0; every
/// row must keep at least one entry. An empty mask means no masking.
inline Tensor masked_softmax_rows(Tape& tape, const Tensor& x,
                                  std::span<const std::uint8_t> mask) {
  detail::require_rank(x, 2, "softmax_rows");
  const std::size_t n = x.dim(0), m = x.dim(1);
  if (!mask.empty() && mask.size() != n * m) {
    throw DimensionError("softmax_rows: mask size does not match " +
                         shape_string(x.shape()));
  }
  Tensor out = Tensor::zeros({n, m});
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (mask.empty() || mask[i * m + j]) peak = std::max(peak, x[i * m + j]);
    }
    if (!std::isfinite(peak)) {
      throw ContractError("softmax_rows: row " + std::to_string(i) +
                          " is fully masked");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (mask.empty() || mask[i * m + j]) {
        o[i * m + j] = std::exp(x[i * m + j] - peak);
        total += o[i * m + j];
      }
    }
    for (std::size_t j = 0; j < m; ++j) o[i * m + j] /= total;
  }
  if (tape.needs_record(x)) {
    tape.record(out, [x, out, n, m]() mutable {
      auto gx = x.grad_buffer();
      auto g = out.grad();
      auto y = out.data();
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < m; ++j) dot += g[i * m + j] * y[i * m + j];
        for (std::size_t j = 0; j < m; ++j) {
          gx[i * m + j] += y[i * m + j] * (g[i * m + j] - dot);
        }
      }
    });
  }
  return out;
}

inline Tensor softmax_rows(Tape& tape, const Tensor& x) {
  return masked_softmax_rows(tape, x, {});
}

inline Tensor activation(Tape& tape, const Tensor& x, Activation kind) {
  if (x.size() == 0) throw ContractError("activation on empty tensor");
  switch (kind) {
    case Activation::kRelu:
      return relu(tape, x);
    case Activation::kLeakyRelu:
      return leaky_relu(tape, x);
    case Activation::kSoftmaxRows:
      return softmax_rows(tape, x);
  }
  throw ParameterError("unknown activation");
}

/// Per-row normalization with learned gain and shift.
inline Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain,
                         const Tensor& shift, double eps = 1e-5) {
  detail::require_rank(x, 2, "layer_norm");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (gain.size() != d || shift.size() != d) {
    throw DimensionError("layer_norm: gain/shift must have " +
                         std::to_string(d) + " entries");
  }
  Tensor out = Tensor::zeros({n, d});
  auto o = out.mutable_data();
  std::vector<double> xhat(n * d), inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += x[i * d + j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x[i * d + j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (x[i * d + j] - mean) * inv_std[i];
      o[i * d + j] = gain[j] * xhat[i * d + j] + shift[j];
    }
  }
  out = detail::finished(out, "layer_norm");
  if (tape.needs_record(x, gain, shift)) {
    tape.record(out, [x, gain, shift, out, xhat = std::move(xhat),
                      inv_std = std::move(inv_std), n, d]() mutable {
      auto g = out.grad();
      if (gain.requires_grad() || shift.requires_grad()) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < d; ++j) {
            if (gain.requires_grad()) {
              gain.grad_buffer()[j] += g[i * d + j] * xhat[i * d + j];
            }
            if (shift.requires_grad()) shift.grad_buffer()[j] += g[i * d + j];
          }
        }
      }
      if (x.requires_grad()) {
        auto gx = x.grad_buffer();
        const double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t i = 0; i < n; ++i) {
          double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double dxhat = g[i * d + j] * gain[j];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xhat[i * d + j];
          }
          mean_dxhat *= inv_d;
          mean_dxhat_xhat *= inv_d;
          for (std::size_t j = 0; j < d; ++j) {
            const double dxhat = g[i * d + j] * gain[j];
            gx[i * d + j] += inv_std[i] * (dxhat - mean_dxhat -
                                           xhat[i * d + j] * mean_dxhat_xhat);
          }
        }
      }
    });
  }
  return out;
}

/// Rows of table[V×d] picked by ids → [len×d]. Embedding lookup.
inline Tensor gather_rows(Tape& tape, const Tensor& table,
                          std::span<const std::size_t> ids) {
  detail::require_rank(table, 2, "gather_rows");
  const std::size_t v = table.dim(0), d = table.dim(1);
  Tensor out = Tensor::zeros({ids.size(), d});
  auto o = out.mutable_data();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= v) {
      throw DataError("gather_rows: id " + std::to_string(ids[r]) +
                      " outside table of " + std::to_string(v) + " rows");
    }
    std::copy_n(table.data().begin() + ids[r] * d, d, o.begin() + r * d);
  }
  if (tape.needs_record(table)) {
    std::vector<std::size_t> rows(ids.begin(), ids.end());
    tape.record(out, [table, out, rows = std::move(rows), d]() mutable {
      auto gt = table.grad_buffer();
      auto g = out.grad();
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t j = 0; j < d; ++j) gt[rows[r] * d + j] += g[r * d + j];
      }
    });
  }
  return out;
}

/// Row i of a matrix as a vector [d].
inline Tensor select_row(Tape& tape, const Tensor& x, std::size_t row) {
  detail::require_rank(x, 2, "select_row");
  const std::size_t d = x.dim(1);
  if (row >= x.dim(0)) {
    throw DimensionError("select_row: row " + std::to_string(row) +
                         " outside " + shape_string(x.shape()));
  }
  std::vector<double> values(x.data().begin() + row * d,
                             x.data().begin() + (row + 1) * d);
  Tensor out = Tensor::from({d}, std::move(values));
  if (tape.needs_record(x)) {
    tape.record(out, [x, out, row, d]() mutable {
      auto gx = x.grad_buffer();
      auto g = out.grad();
      for (std::size_t j = 0; j < d; ++j) gx[row * d + j] += g[j];
    });
  }
  return out;
}

/// Stacks equally sized vectors into an [n×d] matrix.
inline Tensor stack_rows(Tape& tape, const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ContractError("stack_rows: no rows");
  const std::size_t d = rows.front().size();
  Tensor out = Tensor::zeros({rows.size(), d});
  auto o = out.mutable_data();
  bool any_grad = false;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != d) {
      throw DimensionError("stack_rows: row " + std::to_string(r) + " has " +
                           std::to_string(rows[r].size()) + " entries, want " +
                           std::to_string(d));
    }
    std::copy(rows[r].data().begin(), rows[r].data().end(), o.begin() + r * d);
    any_grad = any_grad || rows[r].requires_grad();
  }
  if (tape.recording() && any_grad) {
    tape.record(out, [rows, out, d]() mutable {
      auto g = out.grad();
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].requires_grad()) continue;
        auto gr = rows[r].grad_buffer();
        for (std::size_t j = 0; j < d; ++j) gr[j] += g[r * d + j];
      }
    });
  }
  return out;
}

/// Column-wise mean of [n×d] → [d].
inline Tensor mean_rows(Tape& tape, const Tensor& x) {
  detail::require_rank(x, 2, "mean_rows");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (n == 0) throw ContractError("mean_rows: empty input");
  Tensor out = Tensor::zeros({d});
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) o[j] += x[i * d + j];
  }
  for (double& v : o) v /= static_cast<double>(n);
  if (tape.needs_record(x)) {
    tape.record(out, [x, out, n, d]() mutable {
      auto gx = x.grad_buffer();
      auto g = out.grad();
      const double inv = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += g[j] * inv;
      }
    });
  }
  return out;
}

/// Column-wise max of [n×d] → [d]; the gradient goes to the first maximizer.
inline Tensor max_rows(Tape& tape, const Tensor& x) {
  detail::require_rank(x, 2, "max_rows");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (n == 0) throw ContractError("max_rows: empty input");
  Tensor out = Tensor::zeros({d});
  auto o = out.mutable_data();
  std::vector<std::size_t> arg(d, 0);
  for (std::size_t j = 0; j < d; ++j) {
    o[j] = x[j];
    for (std::size_t i = 1; i < n; ++i) {
      if (x[i * d + j] > o[j]) {
        o[j] = x[i * d + j];
        arg[j] = i;
      }
    }
  }
  if (tape.needs_record(x)) {
    tape.record(out, [x, out, arg = std::move(arg), d]() mutable {
      auto gx = x.grad_buffer();
      auto g = out.grad();
      for (std::size_t j = 0; j < d; ++j) gx[arg[j] * d + j] += g[j];
    });
  }
  return out;
}

/// out[i][j] = row_term[i] + col_term[j]; both inputs hold n entries.
inline Tensor pairwise_sum(Tape& tape, const Tensor& row_term,
                           const Tensor& col_term) {
  const std::size_t n = row_term.size();
  if (col_term.size() != n) {
    throw DimensionError("pairwise_sum: " + shape_string(row_term.shape()) +
                         " vs " + shape_string(col_term.shape()));
  }
  Tensor out = Tensor::zeros({n, n});
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) o[i * n + j] = row_term[i] + col_term[j];
  }
  if (tape.needs_record(row_term, col_term)) {
    tape.record(out, [row_term, col_term, out, n]() mutable {
      auto g = out.grad();
      if (row_term.requires_grad()) {
        auto gr = row_term.grad_buffer();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) gr[i] += g[i * n + j];
        }
      }
      if (col_term.requires_grad()) {
        auto gc = col_term.grad_buffer();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) gc[j] += g[i * n + j];
        }
      }
    });
  }
  return out;
}

inline Tensor sum(Tape& tape, const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor out = detail::finished(Tensor::scalar(total), "sum");
  if (tape.needs_record(x)) {
    tape.record(out, [x, out]() mutable {
      const double g = out.grad()[0];
      for (double& v : x.grad_buffer()) v += g;
    });
  }
  return out;
}

/// Inverted dropout: survivors are scaled by 1/(1-rate) at train time so
/// that evaluation is the identity.
template <typename Rng>
Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training,
               Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout rate must lie in [0, 1), got " +
                         std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const double factor = 1.0 / (1.0 - rate);
  std::vector<double> multiplier(x.size());
  for (double& m : multiplier) m = keep(rng) ? factor : 0.0;
  std::vector<double> values(x.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = x[i] * multiplier[i];
  }
  Tensor out = Tensor::from(x.shape(), std::move(values));
  if (tape.needs_record(x)) {
    tape.record(out, [x, out, multiplier = std::move(multiplier)]() mutable {
      auto gx = x.grad_buffer();
      auto g = out.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * multiplier[i];
    });
  }
  return out;
}

/// Mean over rows of −log softmax(logits)[i, target_i]. A rank-1 logits
/// tensor is one row.
inline Tensor cross_entropy(Tape& tape, const Tensor& logits,
                            std::span<const std::size_t> targets) {
  if (logits.rank() != 1 && logits.rank() != 2) {
    throw DimensionError("cross_entropy: logits must be rank 1 or 2, got " +
                         shape_string(logits.shape()));
  }
  const std::size_t n = logits.rows(), c = logits.cols();
  if (targets.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(n) + " rows");
  }
  std::vector<double> probs(n * c);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] >= c) {
      throw LabelError("cross_entropy: target " + std::to_string(targets[i]) +
                       " at row " + std::to_string(i) + " outside [0, " +
                       std::to_string(c) + ")");
    }
    double peak = logits[i * c];
    for (std::size_t j = 1; j < c; ++j) peak = std::max(peak, logits[i * c + j]);
    double norm = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      probs[i * c + j] = std::exp(logits[i * c + j] - peak);
      norm += probs[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= norm;
    total += -(logits[i * c + targets[i]] - peak - std::log(norm));
  }
  Tensor out =
      detail::finished(Tensor::scalar(total / static_cast<double>(n)),
                       "cross_entropy");
  if (tape.needs_record(logits)) {
    std::vector<std::size_t> labels(targets.begin(), targets.end());
    tape.record(out, [logits, out, probs = std::move(probs),
                      labels = std::move(labels), n, c]() mutable {
      auto gl = logits.grad_buffer();
      const double g = out.grad()[0] / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          const double indicator = j == labels[i] ? 1.0 : 0.0;
          gl[i * c + j] += g * (probs[i * c + j] - indicator);
        }
      }
    });
  }
  return out;
}

inline Tensor cross_entropy(Tape& tape, const Tensor& logits,
                            std::size_t target) {
  const std::size_t targets[] = {target};
  return cross_entropy(tape, logits, targets);
}

}  // namespace setn::ops
