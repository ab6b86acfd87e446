#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "setn/core/errors.hpp"
#include "setn/numerics/tensor.hpp"

namespace setn {

/// Define-by-run record of primitive operations.
///
/// Operations append a backward closure when at least one input requires a
/// gradient. Entries are appended in execution order, so replaying them in
/// reverse is a valid topological traversal. A tape supports exactly one
/// backward pass; afterwards it is consumed and its closures are released.
class Tape {
 public:
  enum class Mode { kRecord, kNoGrad };

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  static Tape no_grad() { return Tape(Mode::kNoGrad); }

  bool recording() const { return mode_ == Mode::kRecord && !consumed_; }
  bool consumed() const { return consumed_; }
  std::size_t size() const { return entries_.size(); }

  /// True when an op over these inputs must be recorded.
  template <typename... Ts>
  bool needs_record(const Ts&... inputs) const {
    if (!recording()) return false;
    return (inputs.requires_grad() || ...);
  }

  void record(Tensor& output, std::function<void()> backward) {
    if (consumed_) throw ContractError("recording on a consumed tape");
    output.mark_recorded();
    entries_.push_back({output, std::move(backward)});
  }

  /// Populates gradients of every requires_grad tensor reachable from loss.
  void backward(Tensor loss) {
    if (consumed_) throw ContractError("backward called twice on one tape");
    if (loss.size() != 1) {
      throw ContractError("backward requires a scalar loss, got shape " +
                          shape_string(loss.shape()));
    }
    if (!loss.requires_grad() || loss.is_leaf()) {
      throw ContractError("backward on a loss that was not recorded");
    }
    loss.grad_buffer()[0] += 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
      if (it->output.has_grad()) it->backward();
    }
    entries_.clear();
    entries_.shrink_to_fit();
    consumed_ = true;
  }

 private:
  struct Entry {
    Tensor output;
    std::function<void()> backward;
  };

  Mode mode_;
  bool consumed_ = false;
  std::vector<Entry> entries_;
};

}  // namespace setn
