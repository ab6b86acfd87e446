#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

namespace setn {
namespace {

using testing::max_abs_diff;

ModelConfig small_config(GnnKind gnn = GnnKind::kGcn, bool residual = true) {
  ModelConfig c;
  c.vocab_size = 30;
  c.hidden_dim = 6;
  c.encoder_blocks = 1;
  c.ff_dim = 8;
  c.max_tokens = 16;
  c.num_sectors = 17;
  c.num_industries = 33;
  c.gnn = gnn;
  c.residual = residual;
  c.dropout = 0.2;
  return c;
}

struct Fixture {
  StockGraph graph{5, {{1, 0}, {2, 0}, {3, 0}, {2, 1}, {0, 4}}};
  std::vector<TokenSequence> tokens;

  Fixture() {
    std::mt19937_64 rng(17);
    for (std::size_t i = 0; i < 5; ++i) {
      TokenSequence t;
      for (std::size_t j = 0; j < 4 + i; ++j) t.ids.push_back(3 + rng() % 27);
      tokens.push_back(t);
    }
  }

  std::vector<StockText> texts(const Subgraph& sub) const {
    std::vector<StockText> out;
    for (std::size_t id : sub.members) out.push_back({id, &tokens[id]});
    return out;
  }
};

std::vector<double> pooled_text(const SetnModel& m, const TokenSequence& t) {
  Tape tape = Tape::no_grad();
  auto v = pool(tape, encode(tape, t, m.encoder), m.config.pooling);
  return {v.data().begin(), v.data().end()};
}

void zero(Tensor t) {
  for (double& v : t.mutable_data()) v = 0.0;
}

TEST(Forward, ZeroGnnLeavesTextEmbedding) {
  Fixture f;
  auto m = SetnModel::init(small_config(), 3);
  zero(m.gnn.weight);
  zero(m.gnn.bias);
  auto sub = sample_subgraph(f.graph, 0);
  auto h = embed_stock(m, sub, f.texts(sub));
  EXPECT_EQ(h, pooled_text(m, f.tokens[0]));
}

TEST(Forward, NoGnnMatchesTextOnlyClassifier) {
  Fixture f;
  auto m = SetnModel::init(small_config(GnnKind::kNone), 3);
  auto sub = sample_subgraph(f.graph, 0);
  Tape tape = Tape::no_grad();
  std::mt19937_64 rng(0);
  auto r = forward(tape, m, sub, f.texts(sub), false, rng);

  const auto text = pooled_text(m, f.tokens[0]);
  std::vector<double> act(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) act[i] = std::max(text[i], 0.0);
  auto x = Tensor::from({1, act.size()}, act);
  auto expect17 = ops::linear(tape, x, m.sector_head.weight, m.sector_head.bias);
  auto expect33 = ops::linear(tape, x, m.industry_head.weight, m.industry_head.bias);
  EXPECT_EQ(max_abs_diff(r.sector_logits.data(), expect17.data()), 0.0);
  EXPECT_EQ(max_abs_diff(r.industry_logits.data(), expect33.data()), 0.0);
}

TEST(Forward, OutputShapes) {
  Fixture f;
  for (auto kind : {GnnKind::kGcn, GnnKind::kGat, GnnKind::kNone}) {
    auto m = SetnModel::init(small_config(kind), 1);
    auto sub = sample_subgraph(f.graph, 0);
    Tape tape = Tape::no_grad();
    std::mt19937_64 rng(0);
    auto r = forward(tape, m, sub, f.texts(sub), false, rng);
    EXPECT_EQ(r.embedding.shape(), (Shape{6}));
    EXPECT_EQ(r.sector_logits.shape(), (Shape{17}));
    EXPECT_EQ(r.industry_logits.shape(), (Shape{33}));
  }
}

TEST(Forward, MisalignedTextsAreRejected) {
  Fixture f;
  auto m = SetnModel::init(small_config(), 1);
  auto sub = sample_subgraph(f.graph, 0);
  auto texts = f.texts(sub);
  std::swap(texts[1], texts[2]);
  Tape tape = Tape::no_grad();
  std::mt19937_64 rng(0);
  EXPECT_THROW(forward(tape, m, sub, texts, false, rng), ContractError);
  texts.pop_back();
  EXPECT_THROW(forward(tape, m, sub, texts, false, rng), ContractError);
}

// Dense oracle for a 1-node subgraph: text + ReLU(text·W + b).
TEST(EmbedStock, IsolatedStockIsTextPlusSelfOnlyGnn) {
  Fixture f;
  auto m = SetnModel::init(small_config(), 4);
  auto sub = sample_subgraph(f.graph, 3);  // node 3 has no in-edges
  ASSERT_EQ(sub.size(), 1u);
  const auto text = pooled_text(m, f.tokens[3]);
  const std::size_t d = text.size();
  std::vector<double> expected(d);
  for (std::size_t c = 0; c < d; ++c) {
    double acc = m.gnn.bias[c];
    for (std::size_t t = 0; t < d; ++t) acc += text[t] * m.gnn.weight.at(t, c);
    expected[c] = text[c] + std::max(acc, 0.0);
  }
  EXPECT_LT(max_abs_diff(embed_stock(m, sub, f.texts(sub)), expected), 1e-14);
}

TEST(EmbedStock, ResidualOffReturnsGnnOutput) {
  Fixture f;
  auto on = SetnModel::init(small_config(GnnKind::kGcn, true), 4);
  auto off = on.clone();
  off.config.residual = false;
  auto sub = sample_subgraph(f.graph, 0);
  const auto text = pooled_text(on, f.tokens[0]);
  const auto with = embed_stock(on, sub, f.texts(sub));
  const auto without = embed_stock(off, sub, f.texts(sub));
  for (std::size_t i = 0; i < text.size(); ++i) {
    EXPECT_NEAR(with[i], text[i] + without[i], 1e-14);
  }
}

TEST(EmbedStock, NeighborTextReachesTarget) {
  Fixture f;
  auto sub = sample_subgraph(f.graph, 0);
  for (auto kind : {GnnKind::kGcn, GnnKind::kGat, GnnKind::kNone}) {
    auto m = SetnModel::init(small_config(kind), 8);
    // Positive bias keeps the GNN ReLU open so neighbor changes show.
    if (kind != GnnKind::kNone) {
      for (double& v : m.gnn.bias.mutable_data()) v = 5.0;
    }
    const auto before = embed_stock(m, sub, f.texts(sub));
    Fixture g = f;
    g.tokens[1].ids = {2, 29, 29, 29};
    const auto after = embed_stock(m, sub, g.texts(sub));
    if (kind == GnnKind::kNone) {
      EXPECT_EQ(before, after);
    } else {
      EXPECT_GT(max_abs_diff(before, after), 1e-6);
    }
  }
}

TEST(EmbedStock, CachedAndUncachedAreBitIdentical) {
  Fixture f;
  for (auto policy : {EncoderPolicy::kNone, EncoderPolicy::kLastBlockOnly}) {
    auto cfg = small_config(GnnKind::kGat);
    cfg.encoder_blocks = 2;
    cfg.encoder_policy = policy;
    auto m = SetnModel::init(cfg, 6);
    EncodingCache cache;
    for (std::size_t target = 0; target < 5; ++target) {
      auto sub = sample_subgraph(f.graph, target);
      auto plain = embed_stock(m, sub, f.texts(sub));
      auto cached = embed_stock(m, sub, f.texts(sub), &cache);
      auto again = embed_stock(m, sub, f.texts(sub), &cache);
      EXPECT_EQ(plain, cached);
      EXPECT_EQ(plain, again);
    }
    EXPECT_EQ(cache.size(), 5u);
  }
}

TEST(Loss, UniformLogitsGiveSumOfLogs) {
  Fixture f;
  auto m = SetnModel::init(small_config(), 2);
  for (auto* head : {&m.sector_head, &m.industry_head}) {
    zero(head->weight);
    zero(head->bias);
  }
  auto sub = sample_subgraph(f.graph, 0);
  Tape tape;
  std::mt19937_64 rng(0);
  auto r = forward(tape, m, sub, f.texts(sub), true, rng);
  auto loss = compute_loss(tape, r, 4, 20);
  EXPECT_NEAR(loss.item(), std::log(17.0) + std::log(33.0), 1e-12);
  EXPECT_NEAR(loss.item(), 6.3297, 1e-4);
}

TEST(Loss, ConfidentCorrectLogitsAreNearZero) {
  Tape tape;
  ForwardResult r;
  std::vector<double> s(17, -20.0), i(33, -20.0);
  s[3] = 20.0;
  i[7] = 20.0;
  r.sector_logits = Tensor::from({17}, s);
  r.industry_logits = Tensor::from({33}, i);
  EXPECT_LT(compute_loss(tape, r, 3, 7).item(), 1e-3);
}

TEST(Loss, OutOfRangeLabelIsLabelError) {
  Tape tape;
  ForwardResult r;
  r.sector_logits = Tensor::zeros({17});
  r.industry_logits = Tensor::zeros({33});
  EXPECT_THROW(compute_loss(tape, r, 17, 0), LabelError);
}

TEST(Model, InitIsDeterministicAndCloneIsDeep) {
  auto a = SetnModel::init(small_config(GnnKind::kGat), 42);
  auto b = SetnModel::init(small_config(GnnKind::kGat), 42);
  auto pa = a.parameters(), pb = b.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(max_abs_diff(pa[i].data(), pb[i].data()), 0.0);
  }
  auto c = a.clone();
  c.gnn.weight.mutable_data()[0] += 1.0;
  EXPECT_NE(c.gnn.weight[0], a.gnn.weight[0]);
}

TEST(Model, TrainableParametersFollowPolicy) {
  auto cfg = small_config();
  cfg.encoder_blocks = 2;
  cfg.encoder_policy = EncoderPolicy::kNone;
  auto frozen = SetnModel::init(cfg, 1);
  // GNN weight and bias plus two heads of two tensors each.
  EXPECT_EQ(frozen.trainable_parameters().size(), 6u);
  cfg.encoder_policy = EncoderPolicy::kAll;
  auto all = SetnModel::init(cfg, 1);
  EXPECT_EQ(all.trainable_parameters().size(), all.parameters().size());
}

TEST(Model, FullForwardGradientsMatchFiniteDifferences) {
  Fixture f;
  for (auto kind : {GnnKind::kGcn, GnnKind::kGat}) {
    auto cfg = small_config(kind);
    cfg.encoder_policy = EncoderPolicy::kAll;
    cfg.dropout = 0.0;
    auto m = SetnModel::init(cfg, 10);
    auto sub = sample_subgraph(f.graph, 0);
    const auto texts = f.texts(sub);
    auto fn = [&](Tape& t) {
      std::mt19937_64 rng(0);
      auto r = forward(t, m, sub, texts, true, rng);
      return compute_loss(t, r, 5, 12);
    };
    EXPECT_LT(grad_check(fn, m.parameters()), 1e-4) << static_cast<int>(kind);
  }
}

}  // namespace
}  // namespace setn
