#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

namespace setn {
namespace {

using testing::max_abs_diff;

std::vector<double> naive_linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t n = x.dim(0), d = x.dim(1), k = w.dim(1);
  std::vector<double> out(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double acc = b[j];
      for (std::size_t t = 0; t < d; ++t) acc += x.at(i, t) * w.at(t, j);
      out[i * k + j] = acc;
    }
  }
  return out;
}

Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng,
                     bool grad = true) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(r * c);
  for (double& x : v) x = dist(rng);
  return Tensor::from({r, c}, std::move(v), grad);
}

TEST(Linear, IdentityWeight) {
  Tape tape;
  auto y = ops::linear(tape, Tensor::matrix({{1, 2}}), Tensor::matrix({{1, 0}, {0, 1}}),
                       Tensor::vector({0, 0}));
  EXPECT_EQ(y.shape(), (Shape{1, 2}));
  EXPECT_DOUBLE_EQ(y[0], 1.0);
  EXPECT_DOUBLE_EQ(y[1], 2.0);
}

TEST(Linear, HandSum) {
  Tape tape;
  auto y = ops::linear(tape, Tensor::matrix({{1, 1}}), Tensor::matrix({{2}, {3}}),
                       Tensor::vector({1}));
  EXPECT_DOUBLE_EQ(y.item(), 6.0);
}

TEST(Linear, MatchesTripleLoop) {
  std::mt19937_64 rng(4);
  for (std::size_t trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + trial, d = 3 + trial % 4, k = 2 + trial % 3;
    auto x = random_matrix(n, d, rng), w = random_matrix(d, k, rng);
    auto b = Tensor::from({k}, std::vector<double>(k, 0.25 * trial), true);
    Tape tape;
    auto y = ops::linear(tape, x, w, b);
    EXPECT_LT(max_abs_diff(y.data(), naive_linear(x, w, b)), 1e-12);
  }
}

TEST(Linear, ShapeMismatchNamesShapes) {
  Tape tape;
  try {
    ops::linear(tape, Tensor::zeros({2, 3}), Tensor::zeros({4, 5}), Tensor::zeros({5}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4x5"), std::string::npos) << msg;
  }
}

TEST(Linear, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(9);
  auto x = random_matrix(3, 4, rng), w = random_matrix(4, 2, rng);
  auto b = Tensor::vector({0.1, -0.3}, true);
  auto f = [&](Tape& t) { return ops::sum(t, ops::linear(t, x, w, b)); };
  EXPECT_LT(grad_check(f, {x, w, b}), 1e-7);
}

TEST(Activation, Examples) {
  Tape tape;
  EXPECT_EQ(ops::relu(tape, Tensor::scalar(-3)).item(), 0.0);
  EXPECT_DOUBLE_EQ(ops::leaky_relu(tape, Tensor::scalar(-1)).item(), -0.2);
  auto s = ops::softmax_rows(tape, Tensor::matrix({{0, 0}}));
  EXPECT_DOUBLE_EQ(s[0], 0.5);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
}

TEST(Activation, SoftmaxRowsSumToOneAndSurviveLargeLogits) {
  Tape tape;
  auto s = ops::softmax_rows(tape, Tensor::matrix({{1000, 999, -5}, {-3, 0, 3}}));
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_NEAR(s.at(r, 0) + s.at(r, 1) + s.at(r, 2), 1.0, 1e-15);
  }
  EXPECT_NEAR(s.at(0, 0), 1.0 / (1.0 + std::exp(-1.0) + std::exp(-1005.0)), 1e-15);
}

TEST(Activation, MaskedEntriesGetZero) {
  Tape tape;
  const std::vector<std::uint8_t> mask{1, 0, 1};
  auto s = ops::masked_softmax_rows(tape, Tensor::matrix({{2, 50, 2}}), mask);
  EXPECT_EQ(s[1], 0.0);
  EXPECT_DOUBLE_EQ(s[0], 0.5);
}

TEST(Activation, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(1);
  auto x = random_matrix(3, 4, rng);
  auto weights = random_matrix(3, 4, rng, false);
  for (auto kind : {ops::Activation::kLeakyRelu, ops::Activation::kSoftmaxRows}) {
    auto f = [&](Tape& t) {
      auto y = ops::activation(t, x, kind);
      auto prod = ops::linear(t, y, ops::transpose(t, weights), Tensor::zeros({3}));
      return ops::sum(t, prod);
    };
    EXPECT_LT(grad_check(f, {x}), 1e-6);
  }
}

TEST(Dropout, IdentityCases) {
  std::mt19937_64 rng(0);
  Tape tape;
  auto x = Tensor::matrix({{1, 2, 3}});
  EXPECT_TRUE(ops::dropout(tape, x, 0.0, true, rng).same(x));
  EXPECT_TRUE(ops::dropout(tape, x, 0.2, false, rng).same(x));
}

TEST(Dropout, RejectsBadRate) {
  std::mt19937_64 rng(0);
  Tape tape;
  auto x = Tensor::matrix({{1}});
  EXPECT_THROW(ops::dropout(tape, x, 1.0, true, rng), ParameterError);
  EXPECT_THROW(ops::dropout(tape, x, -0.1, true, rng), ParameterError);
}

TEST(Dropout, InvertedScalingPreservesMean) {
  std::mt19937_64 rng(3);
  Tape tape;
  auto x = Tensor::filled({200, 100}, 1.0);
  auto y = ops::dropout(tape, x, 0.2, true, rng);
  double mean = 0.0;
  std::size_t zeros = 0;
  for (double v : y.data()) {
    mean += v;
    if (v == 0.0) ++zeros;
    else EXPECT_DOUBLE_EQ(v, 1.25);
  }
  mean /= static_cast<double>(y.size());
  EXPECT_NEAR(mean, 1.0, 0.02);
  EXPECT_NEAR(static_cast<double>(zeros) / static_cast<double>(y.size()), 0.2, 0.01);
}

TEST(CrossEntropy, UniformLogitsGiveLogC) {
  Tape tape;
  EXPECT_NEAR(ops::cross_entropy(tape, Tensor::zeros({2}), 0).item(), std::log(2.0), 1e-12);
  EXPECT_NEAR(ops::cross_entropy(tape, Tensor::zeros({17}), 5).item(), 2.8332133, 1e-6);
}

TEST(CrossEntropy, ConfidentCorrectIsNearZero) {
  Tape tape;
  EXPECT_LT(ops::cross_entropy(tape, Tensor::matrix({{10, -10}}), std::vector<std::size_t>{0})
                .item(),
            1e-4);
}

TEST(CrossEntropy, OutOfRangeTargetNamesIndex) {
  Tape tape;
  try {
    ops::cross_entropy(tape, Tensor::zeros({3}), 7);
    FAIL() << "expected LabelError";
  } catch (const LabelError& e) {
    EXPECT_NE(std::string(e.what()).find('7'), std::string::npos);
  }
}

TEST(CrossEntropy, GradientIsSoftmaxMinusOneHot) {
  auto logits = Tensor::matrix({{0.3, -1.0, 2.0}, {1.0, 1.0, 1.0}}, true);
  const std::vector<std::size_t> targets{2, 0};
  auto f = [&](Tape& t) { return ops::cross_entropy(t, logits, targets); };
  EXPECT_LT(grad_check(f, {logits}), 1e-7);
}

TEST(Backward, SumGivesOnes) {
  auto x = Tensor::from({2, 3}, {1, -2, 3, 4, 5, -6}, true);
  Tape tape;
  tape.backward(ops::sum(tape, x));
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, NonGradLeafGetsNoBuffer) {
  auto x = Tensor::from({2}, {1, 2}, true);
  auto c = Tensor::from({2}, {3, 4}, false);
  Tape tape;
  tape.backward(ops::sum(tape, ops::add(tape, x, c)));
  EXPECT_TRUE(x.has_grad());
  EXPECT_FALSE(c.has_grad());
}

TEST(Backward, TapeIsConsumedAfterOnePass) {
  auto x = Tensor::scalar(2.0, true);
  Tape tape;
  auto loss = ops::scale(tape, x, 3.0);
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), ContractError);
  EXPECT_DOUBLE_EQ(x.grad()[0], 3.0);
}

TEST(Backward, GradientsAccumulateAcrossReuse) {
  auto x = Tensor::scalar(2.0, true);
  Tape tape;
  tape.backward(ops::add(tape, x, x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
}

TEST(Backward, ComposedOpsMatchFiniteDifferences) {
  std::mt19937_64 rng(12);
  auto x = random_matrix(4, 3, rng), gain = Tensor::vector({1.0, 0.5, 2.0}, true),
       shift = Tensor::vector({0.0, 0.1, -0.2}, true), w = random_matrix(3, 3, rng);
  auto f = [&](Tape& t) {
    auto h = ops::layer_norm(t, ops::matmul(t, x, w), gain, shift);
    auto att = ops::softmax_rows(t, ops::matmul(t, h, ops::transpose(t, h)));
    auto pooled = ops::mean_rows(t, ops::matmul(t, att, h));
    return ops::cross_entropy(t, pooled, 1);
  };
  EXPECT_LT(grad_check(f, {x, gain, shift, w}), 1e-5);
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
  auto theta = Tensor::scalar(0.0, true);
  theta.grad_buffer()[0] = 0.5;
  AdamState state;
  std::vector<Tensor> params{theta};
  adam_step(params, state);
  EXPECT_NEAR(theta.item(), -0.001, 1e-6);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto theta = Tensor::vector({1.0, -2.0}, true);
  AdamState state;
  std::vector<Tensor> params{theta};
  for (int i = 0; i < 5; ++i) adam_step(params, state);
  EXPECT_EQ(theta[0], 1.0);
  EXPECT_EQ(theta[1], -2.0);
}

TEST(Adam, ConvergesOnQuadratic) {
  auto theta = Tensor::scalar(0.0, true);
  AdamState state(AdamConfig{.learning_rate = 0.1});
  std::vector<Tensor> params{theta};
  for (int i = 0; i < 100; ++i) {
    Tape tape;
    auto diff = ops::add(tape, theta, Tensor::scalar(-3.0));
    auto loss = ops::sum(tape, ops::linear(tape, ops::reshape(tape, diff, {1, 1}),
                                           ops::reshape(tape, diff, {1, 1}),
                                           Tensor::zeros({1})));
    tape.backward(loss);
    adam_step(params, state);
    theta.zero_grad();
  }
  EXPECT_LT(std::abs(theta.item() - 3.0), 0.1);
}

TEST(GradCheck, ReluAwayFromKink) {
  auto x = Tensor::matrix({{0.5, -1.2}, {2.0, -0.3}}, true);
  const double err = grad_check(
      [](Tape& t, const Tensor& in) { return ops::sum(t, ops::relu(t, in)); }, x);
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, ConstantFunctionHasZeroError) {
  auto x = Tensor::matrix({{1, 2}}, true);
  const double err =
      grad_check([](Tape&, const Tensor&) { return Tensor::scalar(4.0); }, x);
  EXPECT_EQ(err, 0.0);
}

TEST(GradCheck, NondeterministicFunctionIsRejected) {
  auto x = Tensor::matrix({{1, 2}}, true);
  double drift = 0.0;
  auto f = [&](Tape& t, const Tensor& in) {
    drift += 1.0;
    return ops::sum(t, ops::scale(t, in, drift));
  };
  EXPECT_THROW(grad_check(f, x), ContractError);
}

TEST(Tensor, NonFiniteValuesAreRejected) {
  EXPECT_THROW(Tensor::vector({1.0, std::nan("")}), NonFiniteError);
  EXPECT_THROW(Tensor::from({2, 2}, {1, 2, 3}), DimensionError);
}

}  // namespace
}  // namespace setn
