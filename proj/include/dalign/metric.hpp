#pragma once

// Detection Alignment: fuzzy-set Jaccard index between rescaled line relevance
// and the indicator of the ground-truth vulnerable lines.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dalign/groundtruth.hpp"
#include "dalign/relevance.hpp"

namespace dalign::metric {

struct FuzzyLineSet {
  std::vector<double> memberships;  // each in [0, 1]
};

enum class ExcludeReason { kNone, kEmptyGroundTruth, kEmptyFunction };

std::string_view to_string(ExcludeReason reason);
ExcludeReason exclude_reason_from_string(std::string_view text);

struct DAResult {
  std::string function_id;
  std::string method;
  double da = 0.0;
  double intersection_mass = 0.0;
  double union_mass = 0.0;
  int predicted_label = 0;
  bool excluded = false;
  ExcludeReason exclude_reason = ExcludeReason::kNone;
};

struct MethodSummary {
  std::optional<double> mean_da;  // empty when nothing was evaluated
  std::size_t n_evaluated = 0;    // contributes to the mean, false negatives included
  std::size_t n_excluded = 0;
  std::size_t n_false_negative = 0;
};

struct EvalSummary {
  std::map<std::string, MethodSummary> methods;
  std::optional<double> f1;
};

FuzzyLineSet fuzzify_ground_truth(const gt::GroundTruth& truth);

double da_from_masses(double intersection_mass, double union_mass);

// Scores one vulnerable sample. Empty functions and empty ground truth are
// marked excluded; a benign prediction scores 0 with zero masses. Throws
// ValidationError on a length mismatch or memberships outside [0, 1].
DAResult detection_alignment(const rel::LineRelevanceVector& relevance,
                             const FuzzyLineSet& truth, int predicted_label);

// Per-method mean DA over the non-excluded results, in input order.
EvalSummary aggregate(std::span<const DAResult> results);

// F1 of the positive class; 0 when precision + recall is 0.
double f1_score(std::span<const int> predictions, std::span<const int> labels);

}  // namespace dalign::metric
