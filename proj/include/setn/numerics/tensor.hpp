#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "setn/core/errors.hpp"

namespace setn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

/// Dense row-major array of doubles with an optional gradient buffer.
///
/// A Tensor is a handle: copies share storage, the way parameters are shared
/// between a model and the tape that records operations on them. Use clone()
/// for an independent copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<double> data(shape_size(shape), 0.0);
    return Tensor(std::move(shape), std::move(data), requires_grad);
  }

  static Tensor filled(Shape shape, double value, bool requires_grad = false) {
    std::vector<double> data(shape_size(shape), value);
    return from(std::move(shape), std::move(data), requires_grad);
  }

  /// Rejects size mismatches and non-finite entries.
  static Tensor from(Shape shape, std::vector<double> data,
                     bool requires_grad = false) {
    if (shape_size(shape) != data.size()) {
      throw DimensionError("tensor shape " + shape_string(shape) + " holds " +
                           std::to_string(shape_size(shape)) +
                           " entries, got " + std::to_string(data.size()));
    }
    check_finite(data, "tensor creation");
    return Tensor(std::move(shape), std::move(data), requires_grad);
  }

  static Tensor scalar(double value, bool requires_grad = false) {
    return from({}, {value}, requires_grad);
  }

  static Tensor vector(std::initializer_list<double> values,
                       bool requires_grad = false) {
    return from({values.size()}, std::vector<double>(values), requires_grad);
  }

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false) {
    const std::size_t n = rows.size();
    const std::size_t m = n ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(n * m);
    for (const auto& row : rows) {
      if (row.size() != m) throw DimensionError("ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return from({n, m}, std::move(data), requires_grad);
  }

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const { return impl().shape; }
  std::size_t rank() const { return impl().shape.size(); }
  std::size_t size() const { return impl().data.size(); }
  std::size_t dim(std::size_t axis) const { return impl().shape.at(axis); }
  /// Row count of a matrix; a vector is treated as a single row.
  std::size_t rows() const { return rank() == 2 ? dim(0) : 1; }
  std::size_t cols() const { return rank() == 0 ? 1 : impl().shape.back(); }

  std::span<const double> data() const { return impl().data; }
  std::span<double> mutable_data() { return impl().data; }
  double operator[](std::size_t i) const { return impl().data[i]; }
  double at(std::size_t r, std::size_t c) const {
    return impl().data[r * cols() + c];
  }
  double item() const {
    if (size() != 1) {
      throw DimensionError("item() on tensor of shape " +
                           shape_string(shape()));
    }
    return impl().data[0];
  }

  bool requires_grad() const { return impl().requires_grad; }
  void set_requires_grad(bool value) {
    impl().requires_grad = value;
    if (!value) impl().grad.clear();
  }
  /// Leaves are tensors created by the user rather than by a recorded op.
  bool is_leaf() const { return impl().leaf; }

  bool has_grad() const { return !impl().grad.empty(); }
  std::span<const double> grad() const { return impl().grad; }
  /// Gradient buffer, allocated (zero-filled) on first access.
  /// The handle is const, the shared storage is not.
  std::span<double> grad_buffer() const {
    if (!impl_) throw ContractError("use of undefined tensor");
    auto& g = impl_->grad;
    if (g.empty()) g.assign(impl_->data.size(), 0.0);
    return g;
  }
  void zero_grad() { impl().grad.clear(); }

  Tensor clone() const {
    Tensor copy(impl().shape, impl().data, impl().requires_grad);
    copy.impl().grad = impl().grad;
    return copy;
  }

  /// Same storage identity.
  bool same(const Tensor& other) const { return impl_ == other.impl_; }

  static void check_finite(std::span<const double> values, const char* where) {
    for (double v : values) {
      if (!std::isfinite(v)) {
        throw NonFiniteError(std::string("non-finite value produced in ") +
                             where);
      }
    }
  }

  // Internal: marks an op output as a recorded intermediate.
  void mark_recorded() {
    impl().requires_grad = true;
    impl().leaf = false;
  }

 private:
  struct Impl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
    bool leaf = true;
  };

  Tensor(Shape shape, std::vector<double> data, bool requires_grad)
      : impl_(std::make_shared<Impl>()) {
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
  }

  Impl& impl() {
    if (!impl_) throw ContractError("use of undefined tensor");
    return *impl_;
  }
  const Impl& impl() const {
    if (!impl_) throw ContractError("use of undefined tensor");
    return *impl_;
  }

  std::shared_ptr<Impl> impl_;
};

}  // namespace setn
