#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "setn/core/errors.hpp"
#include "setn/numerics/tape.hpp"
#include "setn/numerics/tensor.hpp"

namespace setn {

/// Scalar-valued function of the tensors registered with the checker. It
/// must build its graph on the given tape and be deterministic.
using ScalarFn = std::function<Tensor(Tape&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  std::size_t entries_checked = 0;
};

/// Compares reverse-mode gradients with central differences of step h for
/// every entry of every tensor in `params`. The relative error of one entry
/// is |analytic − fd| / max(|analytic|, |fd|, floor) with
/// floor = 1e-5 · max(1, |f|). Differences taken at step h carry rounding
/// noise of order eps·|f|/h, so without the floor a structurally zero
/// gradient (a key bias under softmax, say) would report an error of 1.
inline constexpr double kGradCheckFloor = 1e-5;

inline GradCheckReport grad_check_report(const ScalarFn& f,
                                         std::vector<Tensor> params,
                                         double h = 1e-5) {
  auto evaluate = [&f] {
    Tape tape = Tape::no_grad();
    return f(tape).item();
  };
  const double base = evaluate();
  if (evaluate() != base) {
    throw ContractError("grad_check: function is not deterministic");
  }
  const double floor = kGradCheckFloor * std::max(1.0, std::abs(base));

  for (auto& p : params) p.zero_grad();
  {
    Tape tape;
    Tensor loss = f(tape);
    if (loss.size() != 1) throw ContractError("grad_check: non-scalar output");
    if (loss.requires_grad() && !loss.is_leaf()) tape.backward(loss);
  }

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    std::vector<double> analytic(p.size(), 0.0);
    if (p.has_grad()) {
      std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
    }
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + h;
      const double up = evaluate();
      values[i] = original - h;
      const double down = evaluate();
      values[i] = original;
      const double numeric = (up - down) / (2.0 * h);
      const double denom =
          std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      const double err = std::abs(analytic[i] - numeric) / denom;
      ++report.entries_checked;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_param = pi;
        report.worst_index = i;
        report.analytic_at_worst = analytic[i];
        report.numeric_at_worst = numeric;
      }
    }
  }
  return report;
}

inline double grad_check(const ScalarFn& f, std::vector<Tensor> params,
                         double h = 1e-5) {
  return grad_check_report(f, std::move(params), h).max_relative_error;
}

/// Single-input form: f receives the tape and X.
inline double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                         const Tensor& x, double h = 1e-5) {
  return grad_check([&](Tape& tape) { return f(tape, x); },
                    std::vector<Tensor>{x}, h);
}

}  // namespace setn
