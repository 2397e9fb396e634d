#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "dalign/error.hpp"
#include "dalign/relevance.hpp"
#include "dalign/rng.hpp"

namespace dalign::rel {
namespace {

AttentionTensor random_attention(Rng& rng, std::size_t heads, std::size_t seq_len) {
  AttentionTensor t;
  t.function_id = "r";
  t.layer = 1;
  t.heads = heads;
  t.seq_len = seq_len;
  t.values.resize(heads * seq_len * seq_len);
  for (std::size_t row = 0; row < heads * seq_len; ++row) {
    double total = 0.0;
    for (std::size_t k = 0; k < seq_len; ++k) {
      const double e = std::exp(rng.normal(0.0, 2.0));
      t.values[row * seq_len + k] = e;
      total += e;
    }
    for (std::size_t k = 0; k < seq_len; ++k) t.values[row * seq_len + k] /= total;
  }
  return t;
}

TokenRelevanceRecord random_record(Rng& rng, std::size_t lines, std::size_t tokens) {
  TokenRelevanceRecord r{"f", "external", 1, {}};
  for (std::size_t i = 0; i < tokens; ++i) {
    r.scores.push_back({rng.below(lines), rng.normal()});
  }
  return r;
}

TEST(AttentionRelevance, UniformSingleHead) {
  AttentionTensor t{"f", 1, 1, 2, {0.5, 0.5, 0.5, 0.5}};
  EXPECT_EQ(incoming_attention(t), (std::vector<double>{1.0, 1.0}));
}

TEST(AttentionRelevance, TwoHeadsHandSum) {
  // Head 0 uniform, head 1 puts all mass on key 0.
  AttentionTensor t{"f", 1, 2, 2, {0.5, 0.5, 0.5, 0.5, 1.0, 0.0, 1.0, 0.0}};
  const auto r = incoming_attention(t);
  EXPECT_DOUBLE_EQ(r[0], 3.0);
  EXPECT_DOUBLE_EQ(r[1], 1.0);
}

TEST(AttentionRelevance, DropsSpecialPositions) {
  Rng rng(1);
  const AttentionTensor t = random_attention(rng, 2, 5);
  const auto incoming = incoming_attention(t);
  const std::vector<std::size_t> lines = {0, 0, 1};
  const std::vector<std::size_t> specials = {0, 4};
  const TokenRelevanceRecord rec = attention_token_relevance(t, lines, specials);
  ASSERT_EQ(rec.scores.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rec.scores[i].score, incoming[i + 1]);
    EXPECT_EQ(rec.scores[i].line, lines[i]);
  }
  EXPECT_EQ(rec.function_id, "r");
}

TEST(AttentionRelevance, LineMapMustCoverContent) {
  Rng rng(2);
  const AttentionTensor t = random_attention(rng, 1, 4);
  const std::vector<std::size_t> lines = {0};
  const std::vector<std::size_t> specials = {0, 3};
  EXPECT_THROW(attention_token_relevance(t, lines, specials), ValidationError);
}

TEST(AttentionRelevance, ConservationProperty) {
  Rng rng(3);
  for (int round = 0; round < 500; ++round) {
    const std::size_t heads = 1 + rng.below(4);
    const std::size_t seq = 1 + rng.below(12);
    const AttentionTensor t = random_attention(rng, heads, seq);
    ASSERT_NO_THROW(t.validate());
    const auto r = incoming_attention(t);
    const double total = std::accumulate(r.begin(), r.end(), 0.0);
    EXPECT_NEAR(total, static_cast<double>(heads * seq), 1e-4);
    for (double v : r) EXPECT_GE(v, 0.0);
  }
}

TEST(AttentionTensorValidate, RejectsNonSoftmax) {
  AttentionTensor bad{"f", 1, 1, 2, {0.5, 0.6, 0.5, 0.5}};
  try {
    bad.validate();
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("not a softmax output"), std::string::npos);
  }
  AttentionTensor negative{"f", 1, 1, 2, {1.5, -0.5, 0.5, 0.5}};
  EXPECT_THROW(negative.validate(), ValidationError);
  AttentionTensor shape{"f", 1, 1, 2, {1.0, 0.0, 1.0}};
  EXPECT_THROW(shape.validate(), ValidationError);
  AttentionTensor close{"f", 1, 1, 2, {0.5 + 5e-7, 0.5, 0.5, 0.5}};
  EXPECT_NO_THROW(close.validate());
}

TEST(AggregateLines, DirectSum) {
  const TokenRelevanceRecord r{"f", "external", 1, {{0, 0.2}, {0, 0.3}, {1, 0.5}}};
  const auto v = aggregate_lines(r, 2);
  EXPECT_DOUBLE_EQ(v[0], 0.5);
  EXPECT_DOUBLE_EQ(v[1], 0.5);
}

TEST(AggregateLines, EmptyRecord) {
  const TokenRelevanceRecord r{"f", "external", 1, {}};
  EXPECT_EQ(aggregate_lines(r, 3), (std::vector<double>{0, 0, 0}));
}

TEST(AggregateLines, LineOutOfRange) {
  const TokenRelevanceRecord r{"f", "external", 1, {{3, 1.0}}};
  EXPECT_THROW(aggregate_lines(r, 3), ValidationError);
}

TEST(AggregateLines, GroupByOracle) {
  Rng rng(4);
  for (int round = 0; round < 300; ++round) {
    const std::size_t lines = 1 + rng.below(20);
    const auto rec = random_record(rng, lines, rng.below(60));
    std::map<std::size_t, double> grouped;
    for (const auto& s : rec.scores) grouped[s.line] += s.score;
    const auto v = aggregate_lines(rec, lines);
    ASSERT_EQ(v.size(), lines);
    for (std::size_t l = 0; l < lines; ++l) {
      const auto it = grouped.find(l);
      EXPECT_NEAR(v[l], it == grouped.end() ? 0.0 : it->second, 1e-12);
    }
  }
}

TEST(AggregateLines, Linearity) {
  Rng rng(5);
  for (int round = 0; round < 200; ++round) {
    const std::size_t lines = 1 + rng.below(10);
    auto rec = random_record(rng, lines, rng.below(40));
    const double alpha = rng.uniform(-3.0, 3.0);
    const auto base = aggregate_lines(rec, lines);
    for (auto& s : rec.scores) s.score *= alpha;
    const auto scaled = aggregate_lines(rec, lines);
    for (std::size_t l = 0; l < lines; ++l) EXPECT_NEAR(scaled[l], alpha * base[l], 1e-9);
  }
}

TEST(Rescale, Examples) {
  EXPECT_EQ(rescale(std::vector<double>{2, 4, 6}), (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(rescale(std::vector<double>{5, 5, 5}), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(rescale(std::vector<double>{-1, 0, 3}), (std::vector<double>{0, 0.25, 1}));
  EXPECT_TRUE(rescale(std::vector<double>{}).empty());
  EXPECT_EQ(rescale(std::vector<double>{7}), (std::vector<double>{0}));
}

TEST(Rescale, RejectsNonFinite) {
  EXPECT_THROW(rescale(std::vector<double>{1.0, NAN}), ValidationError);
  EXPECT_THROW(rescale(std::vector<double>{1.0, INFINITY}), ValidationError);
}

TEST(Rescale, RangeAndEndpoints) {
  Rng rng(6);
  for (int round = 0; round < 500; ++round) {
    std::vector<double> v(1 + rng.below(30));
    for (double& x : v) x = rng.normal(0.0, 1e3);
    const auto out = rescale(v);
    bool distinct = false;
    for (double x : v) distinct = distinct || x != v[0];
    for (double x : out) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
    if (distinct) {
      EXPECT_EQ(*std::min_element(out.begin(), out.end()), 0.0);
      EXPECT_EQ(*std::max_element(out.begin(), out.end()), 1.0);
    }
  }
}

TEST(Rescale, ShiftScaleInvariance) {
  Rng rng(7);
  for (int round = 0; round < 500; ++round) {
    std::vector<double> v(2 + rng.below(20));
    for (double& x : v) x = rng.normal();
    const double a = std::exp(rng.uniform(-4.0, 4.0));
    const double b = rng.uniform(-50.0, 50.0);
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = a * v[i] + b;
    const auto rv = rescale(v);
    const auto rw = rescale(w);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(rv[i], rw[i], 1e-9);
  }
}

TEST(AbsoluteVariant, Examples) {
  const TokenRelevanceRecord mixed{"f", "integrated-gradients", 1, {{0, -0.5}, {1, 0.5}}};
  const auto abs = absolute_variant(mixed);
  EXPECT_EQ(abs.method, "integrated-gradients-abs");
  EXPECT_EQ(abs.scores[0].score, 0.5);
  EXPECT_EQ(abs.scores[1].score, 0.5);
  EXPECT_EQ(abs.predicted_label, 1);

  const TokenRelevanceRecord positive{"f", "external", 0, {{0, 0.25}, {2, 1.5}}};
  EXPECT_EQ(absolute_variant(positive).scores, positive.scores);
}

TEST(LineRelevance, TruncatedLinesShareTheMinimum) {
  const TokenRelevanceRecord r{"f", "external", 1, {{0, 2.0}, {1, 4.0}}};
  const LineRelevanceVector v = line_relevance(r, 4);
  EXPECT_EQ(v.values, (std::vector<double>{0.5, 1.0, 0.0, 0.0}));
  EXPECT_EQ(v.method, "external");
  EXPECT_EQ(v.function_id, "f");
}

}  // namespace
}  // namespace dalign::rel
