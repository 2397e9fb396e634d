#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "criteria.hpp"
#include "dalign/error.hpp"
#include "dalign/metric.hpp"
#include "dalign/microformer.hpp"
#include "synthetic.hpp"

namespace dalign::nn {
namespace {

const tok::SpecialIds kSpecials{10, 11, 12};

Dims small_dims() {
  Dims d;
  d.vocab = 13;
  d.d_model = 8;
  d.heads = 2;
  d.layers = 2;
  d.d_ff = 12;
  d.max_len = 16;
  return d;
}

TEST(Dims, Validate) {
  Dims d = small_dims();
  EXPECT_NO_THROW(d.validate());
  d.heads = 3;
  EXPECT_THROW(d.validate(), ValidationError);
  d = small_dims();
  d.layers = 0;
  EXPECT_THROW(d.validate(), ValidationError);
}

TEST(Forward, ZeroModelReturnsClassifierBias) {
  ModelParams p = ModelParams::zeros(small_dims(), kSpecials);
  p.classifier_bias(0, 0) = 0.25;
  p.classifier_bias(0, 1) = -1.5;
  const std::vector<tok::TokenId> ids = {1, 2, 3};
  const ForwardTrace t = forward(p, ids);
  EXPECT_EQ(t.logits[0], 0.25);
  EXPECT_EQ(t.logits[1], -1.5);
  EXPECT_EQ(t.predicted_label, 0);
}

TEST(Forward, ZeroQueryKeyGivesUniformAttention) {
  Dims d = small_dims();
  d.heads = 1;
  ModelParams p = ModelParams::random(d, kSpecials, 3);
  for (LayerParams& l : p.layers) {
    l.wq.fill(0.0);
    l.wk.fill(0.0);
  }
  for (std::size_t n : {0u, 1u, 5u}) {
    const std::vector<tok::TokenId> ids(n, 4);
    const ForwardTrace t = forward(p, ids);
    for (const rel::AttentionTensor& a : t.attention) {
      ASSERT_EQ(a.seq_len, n + 2);
      for (double v : a.values) EXPECT_NEAR(v, 1.0 / static_cast<double>(n + 2), 1e-15);
    }
  }
}

TEST(Forward, TraceShapeAndSoftmaxRows) {
  const ModelParams p = ModelParams::random(small_dims(), kSpecials, 5);
  const std::vector<tok::TokenId> ids = {0, 3, 9, 9, 2};
  const ForwardTrace t = forward(p, ids);
  ASSERT_EQ(t.attention.size(), 2u);
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_EQ(t.attention[m].layer, m + 1);
    EXPECT_EQ(t.attention[m].heads, 2u);
    EXPECT_EQ(t.attention[m].seq_len, 7u);
    EXPECT_NO_THROW(t.attention[m].validate(1e-6));
  }
  EXPECT_EQ(t.input_embeddings.rows(), 7u);
  EXPECT_EQ(t.predicted_label, t.logits[1] > t.logits[0] ? 1 : 0);
  const auto direct = logits_from_embeddings(p, embed(p, ids));
  EXPECT_EQ(direct, t.logits);
}

TEST(Forward, Deterministic) {
  const ModelParams a = ModelParams::random(small_dims(), kSpecials, 7);
  const ModelParams b = ModelParams::random(small_dims(), kSpecials, 7);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == ModelParams::random(small_dims(), kSpecials, 8));
  const std::vector<tok::TokenId> ids = {1, 1, 2, 3};
  EXPECT_EQ(forward(a, ids).logits, forward(b, ids).logits);
}

TEST(Forward, RejectsBadInput) {
  const ModelParams p = ModelParams::random(small_dims(), kSpecials, 1);
  const std::vector<tok::TokenId> too_long(15, 1);
  EXPECT_THROW(forward(p, too_long), ValidationError);
  const std::vector<tok::TokenId> bad_id = {13};
  EXPECT_THROW(forward(p, bad_id), ValidationError);
  const std::vector<tok::TokenId> fits(14, 1);
  EXPECT_NO_THROW(forward(p, fits));
}

TEST(Gradients, FiniteDifferenceAgreement) {
  const auto report = testing::check_gradients(20, 41, 30);
  EXPECT_EQ(report.configurations, 20u);
  EXPECT_LT(report.max_relative_error_embeddings, 1e-4);
  EXPECT_LT(report.max_relative_error_params, 1e-4);
}

TEST(Gradients, BiasOnlyModelHasZeroInputGradient) {
  ModelParams p = ModelParams::zeros(small_dims(), kSpecials);
  p.classifier_bias(0, 1) = 2.0;
  const std::vector<tok::TokenId> ids = {1, 2};
  const Matrix g = grad_embeddings(p, ids, 1);
  for (double v : g.flat()) EXPECT_EQ(v, 0.0);
}

TEST(Gradients, LinearInTheOutputWeights) {
  const ModelParams p = ModelParams::random(small_dims(), kSpecials, 9);
  const std::vector<tok::TokenId> ids = {4, 5, 6};
  const Matrix g0 = grad_embeddings(p, ids, 0);
  const Matrix g1 = grad_embeddings(p, ids, 1);
  const ModelParams diff = grad_params(p, ids, {-1.0, 1.0});
  const ModelParams d0 = grad_params(p, ids, {1.0, 0.0});
  const ModelParams d1 = grad_params(p, ids, {0.0, 1.0});
  std::vector<const Matrix*> a, b, c;
  diff.for_each_array([&](std::string_view, const Matrix& m) { a.push_back(&m); });
  d0.for_each_array([&](std::string_view, const Matrix& m) { b.push_back(&m); });
  d1.for_each_array([&](std::string_view, const Matrix& m) { c.push_back(&m); });
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < a[k]->size(); ++i) {
      EXPECT_NEAR(a[k]->flat()[i], c[k]->flat()[i] - b[k]->flat()[i], 1e-12);
    }
  }
  // Token-embedding rows collect the per-position input gradients.
  const Matrix& te0 = d0.token_embedding;
  std::vector<double> expect(p.dims.d_model, 0.0);
  for (std::size_t pos = 1; pos <= ids.size(); ++pos) {
    if (ids[pos - 1] != 4) continue;
    for (std::size_t k = 0; k < p.dims.d_model; ++k) expect[k] += g0(pos, k);
  }
  for (std::size_t k = 0; k < p.dims.d_model; ++k) EXPECT_NEAR(te0(4, k), expect[k], 1e-12);
  (void)g1;
}

TEST(Gradients, IdsOverloadMatchesEmbeddings) {
  const ModelParams p = ModelParams::random(small_dims(), kSpecials, 10);
  const std::vector<tok::TokenId> ids = {7, 8};
  EXPECT_TRUE(grad_embeddings(p, ids, 1) == grad_embeddings(p, embed(p, ids), 1));
}

TEST(IntegratedGradients, BaselineInputScoresZero) {
  const ModelParams p = ModelParams::random(small_dims(), kSpecials, 11);
  const std::vector<tok::TokenId> pads(4, kSpecials.pad);
  for (double v : integrated_gradients_positions(p, pads, {16})) EXPECT_EQ(v, 0.0);
}

TEST(IntegratedGradients, SpecialPositionsScoreZero) {
  const ModelParams p = ModelParams::random(small_dims(), kSpecials, 12);
  const std::vector<tok::TokenId> ids = {1, 2, 3};
  const auto r = integrated_gradients_positions(p, ids, {8});
  ASSERT_EQ(r.size(), 5u);
  EXPECT_EQ(r.front(), 0.0);
  EXPECT_EQ(r.back(), 0.0);
}

TEST(IntegratedGradients, Completeness) {
  const auto report = testing::check_ig_completeness(15, 43);
  EXPECT_GT(report.qualifying, 5u);
  EXPECT_LT(report.max_relative_error_128, 0.01);
  EXPECT_EQ(report.monotonicity_violations, 0u);
}

TEST(IntegratedGradients, RecordShape) {
  const ModelParams p = ModelParams::random(small_dims(), kSpecials, 13);
  tok::TokenizedFunction fn;
  fn.function_id = "f";
  fn.line_count = 2;
  fn.tokens = {{1, {0, 1}, 0}, {'\n', {1, 2}, 0}, {2, {2, 3}, 1}};
  const rel::TokenRelevanceRecord r8 = integrated_gradients(p, fn, {8});
  const rel::TokenRelevanceRecord r128 = integrated_gradients(p, fn, {128});
  EXPECT_EQ(r8.method, "integrated-gradients");
  ASSERT_EQ(r8.scores.size(), 3u);
  ASSERT_EQ(r128.scores.size(), 3u);
  EXPECT_EQ(r8.scores[2].line, 1u);
  EXPECT_EQ(r8.predicted_label, forward(p, fn).predicted_label);
  bool differs = false;
  for (std::size_t i = 0; i < 3; ++i) differs = differs || r8.scores[i].score != r128.scores[i].score;
  EXPECT_TRUE(differs);
}

TEST(AttentionRelevance, LayerSelectionAndConservation) {
  const ModelParams p = ModelParams::random(small_dims(), kSpecials, 14);
  tok::TokenizedFunction fn;
  fn.function_id = "f";
  fn.line_count = 1;
  fn.tokens = {{1, {0, 1}, 0}, {2, {1, 2}, 0}};
  EXPECT_THROW(attention_relevance(p, fn, 0, "x"), ValidationError);
  EXPECT_THROW(attention_relevance(p, fn, 3, "x"), ValidationError);
  const ForwardTrace t = forward(p, fn);
  for (std::size_t layer = 1; layer <= 2; ++layer) {
    const rel::TokenRelevanceRecord r = attention_relevance(p, fn, layer, "tag");
    EXPECT_EQ(r.method, "tag");
    ASSERT_EQ(r.scores.size(), 2u);
    const auto incoming = rel::incoming_attention(t.attention[layer - 1]);
    EXPECT_EQ(r.scores[0].score, incoming[1]);
    EXPECT_EQ(r.scores[1].score, incoming[2]);
    EXPECT_NEAR(std::accumulate(incoming.begin(), incoming.end(), 0.0), 2.0 * 4.0, 1e-12);
  }
}

TEST(AttentionProperty, RowsAndConservation) {
  const auto report = testing::check_attention_conservation(100, 44);
  EXPECT_LT(report.max_row_error, 1e-6);
  EXPECT_LT(report.max_conservation_error, 1e-4);
}

std::vector<LabeledSequence> marker_dataset(const tok::Vocabulary& vocab, std::size_t n,
                                            std::uint64_t seed) {
  std::vector<LabeledSequence> out;
  for (const auto& f : testing::make_marker_corpus(n, seed)) {
    out.push_back({tok::encode(vocab, f.code).ids(), f.label});
  }
  return out;
}

tok::Vocabulary marker_vocab() {
  std::vector<std::string> corpus;
  for (const auto& f : testing::make_marker_corpus(200, 99)) corpus.push_back(f.code);
  return tok::train_bpe(corpus, 400);
}

Dims marker_dims(const tok::Vocabulary& v) {
  Dims d;
  d.vocab = v.size();
  d.max_len = 160;
  return d;
}

TEST(Training, ZeroLearningRateKeepsParams) {
  const tok::Vocabulary v = marker_vocab();
  const auto data = marker_dataset(v, 30, 1);
  const ModelParams init = ModelParams::random(marker_dims(v), v.specials(), 2);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.learning_rate = 0.0;
  EXPECT_TRUE(train_toy(init, data, cfg) == init);
}

TEST(Training, SameSeedSameResult) {
  const tok::Vocabulary v = marker_vocab();
  const auto data = marker_dataset(v, 40, 3);
  const ModelParams init = ModelParams::random(marker_dims(v), v.specials(), 4);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 5;
  TrainReport r1, r2;
  const ModelParams a = train_toy(init, data, cfg, &r1);
  const ModelParams b = train_toy(init, data, cfg, &r2);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(r1.epoch_loss, r2.epoch_loss);
  EXPECT_EQ(r1.epoch_loss.size(), 2u);
  EXPECT_FALSE(a == init);
}

TEST(Training, RejectsEmptyDataset) {
  const ModelParams init = ModelParams::random(small_dims(), kSpecials, 1);
  EXPECT_THROW(train_toy(init, std::vector<LabeledSequence>{}, TrainConfig{}), ValidationError);
}

TEST(Training, LearnsMarkerCorpus) {
  const tok::Vocabulary v = marker_vocab();
  const auto train = marker_dataset(v, 320, 6);
  const auto held_out = marker_dataset(v, 100, 7);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.learning_rate = 3e-3;
  cfg.seed = 8;
  TrainReport report;
  const ModelParams trained =
      train_toy(ModelParams::random(marker_dims(v), v.specials(), 9), train, cfg, &report);
  EXPECT_LE(report.best_epoch, 10u);
  std::vector<int> preds, labels;
  for (const auto& s : held_out) {
    preds.push_back(predict(trained, s.ids));
    labels.push_back(s.label);
  }
  EXPECT_GE(metric::f1_score(preds, labels), 0.95);
}

}  // namespace
}  // namespace dalign::nn
