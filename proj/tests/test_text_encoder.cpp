#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "support.hpp"

namespace setn {
namespace {

Vocab steel_vocab() {
  Vocab v;
  v.add("x3");
  v.add("x4");
  v.add("steel");  // 5
  v.add("x6");
  v.add("maker");  // 7
  return v;
}

TEST(Tokenize, DirectLookupWithCls) {
  auto seq = tokenize("Steel maker", steel_vocab());
  EXPECT_EQ(seq.ids, (std::vector<std::size_t>{2, 5, 7}));
}

TEST(Tokenize, UnknownWordFallsBackToUnk) {
  EXPECT_EQ(tokenize("zinc", steel_vocab()).ids, (std::vector<std::size_t>{2, 1}));
}

TEST(Tokenize, EmptyTextIsClsAlone) {
  EXPECT_EQ(tokenize("   ", steel_vocab()).ids, (std::vector<std::size_t>{2}));
}

TEST(Tokenize, TruncatesTo512) {
  std::string text;
  for (int i = 0; i < 600; ++i) text += "steel ";
  EXPECT_EQ(tokenize(text, steel_vocab()).size(), 512u);
}

TEST(Vocab, CorpusVocabularyIsSortedAndLowercased) {
  auto v = vocab_from_corpus({"Beta alpha", "ALPHA gamma"});
  ASSERT_EQ(v.size(), kReservedIds + 3);
  EXPECT_EQ(v.token(3), "alpha");
  EXPECT_EQ(v.token(4), "beta");
  EXPECT_EQ(v.id("gamma"), 5u);
}

TEST(Vocab, SaveLoadRoundTrip) {
  testing::TempDir dir("vocab");
  auto v = steel_vocab();
  v.save(dir.file("vocab.txt"));
  auto back = Vocab::load(dir.file("vocab.txt"));
  ASSERT_EQ(back.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(back.token(i), v.token(i));
}

TextEncoderParams make_encoder(std::size_t blocks, std::uint64_t seed = 5) {
  std::mt19937_64 rng(seed);
  return TextEncoderParams::init({20, 6, blocks, 12, 16}, rng);
}

TEST(Encode, NoBlocksReturnsEmbeddingRows) {
  auto p = make_encoder(0);
  TokenSequence seq;
  seq.ids = {2, 7, 7, 19};
  Tape tape = Tape::no_grad();
  auto h = encode(tape, seq, p);
  ASSERT_EQ(h.shape(), (Shape{4, 6}));
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 6; ++c) {
      EXPECT_EQ(h.at(r, c), p.token_embedding.at(seq.ids[r], c) +
                                p.position_embedding.at(r, c));
    }
  }
}

TEST(Encode, OutOfVocabularyIdIsDataError) {
  auto p = make_encoder(1);
  TokenSequence seq;
  seq.ids = {2, 20};
  Tape tape = Tape::no_grad();
  EXPECT_THROW(encode(tape, seq, p), DataError);
}

TEST(Encode, TooManyTokensIsDataError) {
  auto p = make_encoder(1);
  TokenSequence seq;
  seq.ids.assign(17, 3);
  Tape tape = Tape::no_grad();
  EXPECT_THROW(encode(tape, seq, p), DataError);
}

TEST(Encode, RowsAreLayerNormalized) {
  auto p = make_encoder(2);
  TokenSequence seq;
  seq.ids = {2, 3, 4, 5};
  Tape tape = Tape::no_grad();
  auto h = encode(tape, seq, p);
  for (std::size_t r = 0; r < h.dim(0); ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < 6; ++c) mean += h.at(r, c);
    EXPECT_NEAR(mean / 6.0, 0.0, 1e-12);
  }
}

TEST(Pool, Examples) {
  Tape tape;
  auto h = Tensor::matrix({{1, 3}, {3, 5}});
  auto mean = pool(tape, h, Pooling::kMean);
  auto max = pool(tape, h, Pooling::kMax);
  auto cls = pool(tape, h, Pooling::kCls);
  EXPECT_EQ(std::vector<double>(mean.data().begin(), mean.data().end()),
            (std::vector<double>{2, 4}));
  EXPECT_EQ(std::vector<double>(max.data().begin(), max.data().end()),
            (std::vector<double>{3, 5}));
  EXPECT_EQ(std::vector<double>(cls.data().begin(), cls.data().end()),
            (std::vector<double>{1, 3}));
}

TEST(Pool, EmptyInputIsContractError) {
  Tape tape;
  EXPECT_THROW(pool(tape, Tensor::zeros({0, 3}), Pooling::kMean), ContractError);
}

TEST(Pool, MeanIsPermutationInvariant) {
  Tape tape;
  auto a = Tensor::matrix({{1, -2}, {0.5, 4}, {3, 3}});
  auto b = Tensor::matrix({{3, 3}, {1, -2}, {0.5, 4}});
  auto pa = pool(tape, a, Pooling::kMean), pb = pool(tape, b, Pooling::kMean);
  EXPECT_LT(testing::max_abs_diff(pa.data(), pb.data()), 1e-15);
}

TEST(SetTrainable, FlagsPerPolicy) {
  auto p = make_encoder(2);
  set_trainable(p, EncoderPolicy::kNone);
  EXPECT_FALSE(p.embeddings_trainable);
  EXPECT_FALSE(p.blocks[0].trainable);
  EXPECT_FALSE(p.blocks[1].trainable);
  for (const auto& t : p.parameters()) EXPECT_FALSE(t.requires_grad());

  set_trainable(p, EncoderPolicy::kLastBlockOnly);
  EXPECT_FALSE(p.embeddings_trainable);
  EXPECT_FALSE(p.blocks[0].trainable);
  EXPECT_TRUE(p.blocks[1].trainable);
  EXPECT_EQ(p.frozen_prefix_blocks(), std::optional<std::size_t>(1));

  set_trainable(p, EncoderPolicy::kAll);
  EXPECT_TRUE(p.embeddings_trainable);
  for (const auto& t : p.parameters()) EXPECT_TRUE(t.requires_grad());
  EXPECT_EQ(p.frozen_prefix_blocks(), std::nullopt);
}

TEST(SetTrainable, LastBlockOnlyNeedsABlock) {
  auto p = make_encoder(0);
  EXPECT_THROW(set_trainable(p, EncoderPolicy::kLastBlockOnly), ParameterError);
}

double train_one_step(TextEncoderParams& p, const TokenSequence& seq) {
  auto params = p.parameters();
  std::vector<Tensor> trainable;
  for (const auto& t : params) {
    if (t.requires_grad()) trainable.push_back(t);
  }
  auto head = Tensor::from({6, 2}, {1, -1, 0.5, 0, -0.3, 0.2, 0.1, 0.1, 2, 0, 0, 1}, false);
  Tape tape;
  auto pooled = pool(tape, encode(tape, seq, p), Pooling::kMean);
  auto logits = ops::linear(tape, ops::reshape(tape, pooled, {1, 6}), head,
                            Tensor::zeros({2}));
  auto loss = ops::cross_entropy(tape, logits, std::vector<std::size_t>{1});
  tape.backward(loss);
  AdamState adam(AdamConfig{.learning_rate = 0.01});
  if (!trainable.empty()) adam_step(trainable, adam);
  return loss.item();
}

TEST(SetTrainable, AllPolicyUpdatesEmbeddingTable) {
  auto p = make_encoder(2);
  set_trainable(p, EncoderPolicy::kAll);
  const std::vector<double> before(p.token_embedding.data().begin(),
                                   p.token_embedding.data().end());
  TokenSequence seq;
  seq.ids = {2, 5, 9};
  train_one_step(p, seq);
  EXPECT_GT(testing::max_abs_diff(before, p.token_embedding.data()), 0.0);
}

TEST(SetTrainable, FrozenStagesReceiveNoGradient) {
  auto p = make_encoder(2);
  set_trainable(p, EncoderPolicy::kLastBlockOnly);
  std::vector<std::vector<double>> before;
  for (const auto& t : p.parameters()) before.emplace_back(t.data().begin(), t.data().end());
  TokenSequence seq;
  seq.ids = {2, 5, 9};
  train_one_step(p, seq);
  const auto after = p.parameters();
  const std::size_t frozen = 2 + p.blocks[0].parameters().size();
  for (std::size_t i = 0; i < after.size(); ++i) {
    const double moved = testing::max_abs_diff(before[i], after[i].data());
    if (i < frozen) {
      EXPECT_EQ(moved, 0.0) << "parameter " << i;
      EXPECT_FALSE(after[i].has_grad()) << "parameter " << i;
    }
  }
  double last_block_moved = 0.0;
  for (std::size_t i = frozen; i < after.size(); ++i) {
    last_block_moved = std::max(last_block_moved, testing::max_abs_diff(before[i], after[i].data()));
  }
  EXPECT_GT(last_block_moved, 0.0);
}

TEST(Encode, GradientsMatchFiniteDifferences) {
  auto p = make_encoder(1, 11);
  set_trainable(p, EncoderPolicy::kAll);
  TokenSequence seq;
  seq.ids = {2, 4, 6};
  auto target = Tensor::from({6}, {0.3, -0.1, 0.2, 0.5, -0.4, 0.0});
  auto f = [&](Tape& t) {
    auto pooled = pool(t, encode(t, seq, p), Pooling::kMean);
    auto diff = ops::add(t, pooled, ops::scale(t, target, -1.0));
    auto m = ops::reshape(t, diff, {1, 6});
    return ops::sum(t, ops::matmul(t, m, ops::transpose(t, m)));
  };
  std::vector<Tensor> checked = p.blocks[0].parameters();
  EXPECT_LT(grad_check(f, checked), 1e-4);
}

}  // namespace
}  // namespace setn
