#include <gtest/gtest.h>

#include <vector>

#include "criteria.hpp"
#include "dalign/error.hpp"
#include "dalign/metric.hpp"
#include "dalign/rng.hpp"

namespace dalign::metric {
namespace {

gt::GroundTruth truth(std::vector<std::size_t> lines, std::size_t count) {
  return {"f", std::move(lines), count};
}

rel::LineRelevanceVector relevance(std::vector<double> values) {
  return {"f", std::move(values), "attention-first"};
}

TEST(Fuzzify, Indicator) {
  EXPECT_EQ(fuzzify_ground_truth(truth({4}, 8)).memberships,
            (std::vector<double>{0, 0, 0, 0, 1, 0, 0, 0}));
  EXPECT_EQ(fuzzify_ground_truth(truth({}, 3)).memberships, (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(fuzzify_ground_truth(truth({0, 1, 2}, 3)).memberships,
            (std::vector<double>{1, 1, 1}));
  EXPECT_THROW(fuzzify_ground_truth(truth({3}, 3)), ValidationError);
}

TEST(DaFromMasses, WorkedExamples) {
  EXPECT_NEAR(da_from_masses(0.3538, 8.3921), 0.0421, 5e-4);
  EXPECT_EQ(da_from_masses(0.0, 1.0), 0.0);
}

TEST(DetectionAlignment, PerfectAlignment) {
  const auto g = fuzzify_ground_truth(truth({1, 3}, 5));
  const DAResult r = detection_alignment(relevance(g.memberships), g, 1);
  EXPECT_EQ(r.da, 1.0);
  EXPECT_EQ(r.intersection_mass, 2.0);
  EXPECT_EQ(r.union_mass, 2.0);
  EXPECT_FALSE(r.excluded);
}

TEST(DetectionAlignment, HandComputedMasses) {
  const auto g = fuzzify_ground_truth(truth({1}, 4));
  const DAResult r = detection_alignment(relevance({0.5, 0.25, 1.0, 0.0}), g, 1);
  EXPECT_DOUBLE_EQ(r.intersection_mass, 0.25);
  EXPECT_DOUBLE_EQ(r.union_mass, 2.5);
  EXPECT_DOUBLE_EQ(r.da, 0.1);
  EXPECT_EQ(r.method, "attention-first");
}

TEST(DetectionAlignment, ZeroOverlap) {
  const auto g = fuzzify_ground_truth(truth({0}, 3));
  const DAResult r = detection_alignment(relevance({0.0, 0.0, 0.0}), g, 1);
  EXPECT_EQ(r.intersection_mass, 0.0);
  EXPECT_EQ(r.union_mass, 1.0);
  EXPECT_EQ(r.da, 0.0);
}

TEST(DetectionAlignment, BenignPredictionScoresZero) {
  const auto g = fuzzify_ground_truth(truth({0}, 2));
  const DAResult r = detection_alignment(relevance({1.0, 0.0}), g, 0);
  EXPECT_EQ(r.da, 0.0);
  EXPECT_EQ(r.intersection_mass, 0.0);
  EXPECT_EQ(r.union_mass, 0.0);
  EXPECT_FALSE(r.excluded);
  EXPECT_EQ(r.predicted_label, 0);
}

TEST(DetectionAlignment, Exclusions) {
  const DAResult empty_gt =
      detection_alignment(relevance({0.5, 1.0}), fuzzify_ground_truth(truth({}, 2)), 1);
  EXPECT_TRUE(empty_gt.excluded);
  EXPECT_EQ(empty_gt.exclude_reason, ExcludeReason::kEmptyGroundTruth);

  const DAResult empty_fn = detection_alignment(relevance({}), fuzzify_ground_truth(truth({}, 0)), 1);
  EXPECT_TRUE(empty_fn.excluded);
  EXPECT_EQ(empty_fn.exclude_reason, ExcludeReason::kEmptyFunction);
}

TEST(DetectionAlignment, RejectsBadInputs) {
  const auto g = fuzzify_ground_truth(truth({0}, 2));
  EXPECT_THROW(detection_alignment(relevance({1.0}), g, 1), ValidationError);
  EXPECT_THROW(detection_alignment(relevance({1.5, 0.0}), g, 1), ValidationError);
  EXPECT_THROW(detection_alignment(relevance({-0.1, 0.0}), g, 1), ValidationError);
}

TEST(ExcludeReasonNames, RoundTrip) {
  for (ExcludeReason r : {ExcludeReason::kNone, ExcludeReason::kEmptyGroundTruth,
                          ExcludeReason::kEmptyFunction}) {
    EXPECT_EQ(exclude_reason_from_string(to_string(r)), r);
  }
  EXPECT_THROW(exclude_reason_from_string("bogus"), ValidationError);
}

TEST(Aggregate, MeanOfTwo) {
  std::vector<DAResult> results(2);
  results[0].method = results[1].method = "m";
  results[0].da = 1.0;
  results[0].predicted_label = results[1].predicted_label = 1;
  const EvalSummary s = aggregate(results);
  ASSERT_TRUE(s.methods.at("m").mean_da.has_value());
  EXPECT_EQ(*s.methods.at("m").mean_da, 0.5);
  EXPECT_EQ(s.methods.at("m").n_evaluated, 2u);
}

TEST(Aggregate, AllExcludedHasNoMean) {
  std::vector<DAResult> results(3);
  for (auto& r : results) {
    r.method = "m";
    r.excluded = true;
    r.exclude_reason = ExcludeReason::kEmptyGroundTruth;
  }
  const EvalSummary s = aggregate(results);
  EXPECT_FALSE(s.methods.at("m").mean_da.has_value());
  EXPECT_EQ(s.methods.at("m").n_excluded, 3u);
  EXPECT_EQ(s.methods.at("m").n_evaluated, 0u);
}

TEST(Aggregate, FalseNegativesCountAsZero) {
  std::vector<DAResult> results(2);
  results[0] = {"a", "m", 0.8, 0.8, 1.0, 1, false, ExcludeReason::kNone};
  results[1] = {"b", "m", 0.0, 0.0, 0.0, 0, false, ExcludeReason::kNone};
  const EvalSummary s = aggregate(results);
  EXPECT_DOUBLE_EQ(*s.methods.at("m").mean_da, 0.4);
  EXPECT_EQ(s.methods.at("m").n_false_negative, 1u);
}

TEST(Aggregate, IndependentSummationOracle) {
  Rng rng(17);
  std::vector<DAResult> results;
  long double total[2] = {0.0L, 0.0L};
  std::size_t count[2] = {0, 0};
  std::size_t excluded[2] = {0, 0};
  for (int i = 0; i < 100; ++i) {
    DAResult r;
    const std::size_t m = rng.below(2);
    r.method = m == 0 ? "first" : "last";
    r.predicted_label = rng.below(5) == 0 ? 0 : 1;
    r.da = r.predicted_label == 1 ? rng.uniform() : 0.0;
    r.excluded = rng.below(10) == 0;
    if (r.excluded) {
      r.exclude_reason = ExcludeReason::kEmptyGroundTruth;
      ++excluded[m];
    } else {
      total[m] += r.da;
      ++count[m];
    }
    results.push_back(r);
  }
  const EvalSummary s = aggregate(results);
  const char* names[] = {"first", "last"};
  for (std::size_t m = 0; m < 2; ++m) {
    const MethodSummary& ms = s.methods.at(names[m]);
    EXPECT_EQ(ms.n_evaluated, count[m]);
    EXPECT_EQ(ms.n_excluded, excluded[m]);
    EXPECT_NEAR(*ms.mean_da, static_cast<double>(total[m] / count[m]), 1e-12);
  }
}

TEST(F1, Cases) {
  const std::vector<int> labels = {1, 0, 1, 0, 1};
  EXPECT_EQ(f1_score(labels, labels), 1.0);
  const std::vector<int> zeros = {0, 0, 0, 0, 0};
  EXPECT_EQ(f1_score(zeros, labels), 0.0);
  // TP=2, FP=1, FN=1.
  const std::vector<int> preds = {1, 1, 1, 0, 0};
  const std::vector<int> truth_labels = {1, 1, 0, 0, 1};
  EXPECT_NEAR(f1_score(preds, truth_labels), 2.0 / 3.0, 1e-15);
  const std::vector<int> short_preds = {1};
  EXPECT_THROW(f1_score(short_preds, labels), ValidationError);
  const std::vector<int> bad = {2};
  EXPECT_THROW(f1_score(short_preds, bad), ValidationError);
}

TEST(Properties, BenignRule) {
  const auto report = testing::check_benign_rule(300, 1);
  EXPECT_EQ(report.cases, 300u);
  EXPECT_EQ(report.violations, 0u);
}

TEST(Properties, DaInvariants) {
  const auto report = testing::check_da_invariants(2000, 2);
  EXPECT_EQ(report.range, 0u);
  EXPECT_EQ(report.perfect_alignment, 0u);
  EXPECT_EQ(report.disjointness, 0u);
  EXPECT_EQ(report.monotone_inside, 0u);
  EXPECT_EQ(report.monotone_outside, 0u);
  EXPECT_EQ(report.symmetry, 0u);
}

}  // namespace
}  // namespace dalign::metric
