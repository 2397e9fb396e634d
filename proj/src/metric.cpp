#include "dalign/metric.hpp"

#include <stdexcept>

#include "dalign/error.hpp"
#include "dalign/simd/kernels.hpp"

namespace dalign::metric {

std::string_view to_string(ExcludeReason reason) {
  switch (reason) {
    case ExcludeReason::kNone:
      return "";
    case ExcludeReason::kEmptyGroundTruth:
      return "empty_ground_truth";
    case ExcludeReason::kEmptyFunction:
      return "empty_function";
  }
  return "";
}

ExcludeReason exclude_reason_from_string(std::string_view text) {
  if (text.empty()) return ExcludeReason::kNone;
  if (text == "empty_ground_truth") return ExcludeReason::kEmptyGroundTruth;
  if (text == "empty_function") return ExcludeReason::kEmptyFunction;
  throw ValidationError("unknown exclude_reason '" + std::string(text) + "'");
}

FuzzyLineSet fuzzify_ground_truth(const gt::GroundTruth& truth) {
  FuzzyLineSet out;
  out.memberships.assign(truth.line_count, 0.0);
  for (std::size_t line : truth.vulnerable_lines) {
    if (line >= truth.line_count) {
      throw ValidationError("ground truth '" + truth.function_id + "': line " +
                            std::to_string(line) + " out of range");
    }
    out.memberships[line] = 1.0;
  }
  return out;
}

double da_from_masses(double intersection_mass, double union_mass) {
  if (union_mass <= 0.0) return 0.0;
  return intersection_mass / union_mass;
}

DAResult detection_alignment(const rel::LineRelevanceVector& relevance,
                             const FuzzyLineSet& truth, int predicted_label) {
  const auto& mu_r = relevance.values;
  const auto& mu_g = truth.memberships;
  if (mu_r.size() != mu_g.size()) {
    throw ValidationError("detection_alignment '" + relevance.function_id + "': relevance has " +
                          std::to_string(mu_r.size()) + " lines, ground truth " +
                          std::to_string(mu_g.size()));
  }
  for (std::size_t l = 0; l < mu_r.size(); ++l) {
    if (!(mu_r[l] >= 0.0 && mu_r[l] <= 1.0) || !(mu_g[l] >= 0.0 && mu_g[l] <= 1.0)) {
      throw ValidationError("detection_alignment '" + relevance.function_id +
                            "': membership outside [0, 1]");
    }
  }

  DAResult out;
  out.function_id = relevance.function_id;
  out.method = relevance.method;
  out.predicted_label = predicted_label;
  if (mu_r.empty()) {
    out.excluded = true;
    out.exclude_reason = ExcludeReason::kEmptyFunction;
    return out;
  }
  if (simd::sum(mu_g) == 0.0) {
    out.excluded = true;
    out.exclude_reason = ExcludeReason::kEmptyGroundTruth;
    return out;
  }
  if (predicted_label == 0) return out;

  const simd::FuzzyMasses masses = simd::fuzzy_masses(mu_r, mu_g);
  // The ground-truth indicator alone contributes at least 1 to the union.
  if (!(masses.union_ > 0.0)) throw std::logic_error("detection_alignment: empty union");
  out.intersection_mass = masses.intersection;
  out.union_mass = masses.union_;
  out.da = da_from_masses(masses.intersection, masses.union_);
  return out;
}

EvalSummary aggregate(std::span<const DAResult> results) {
  EvalSummary out;
  std::map<std::string, double> totals;
  for (const DAResult& r : results) {
    MethodSummary& m = out.methods[r.method];
    if (r.excluded) {
      ++m.n_excluded;
      continue;
    }
    ++m.n_evaluated;
    if (r.predicted_label == 0) ++m.n_false_negative;
    totals[r.method] += r.da;
  }
  for (auto& [name, m] : out.methods) {
    if (m.n_evaluated > 0) m.mean_da = totals[name] / static_cast<double>(m.n_evaluated);
  }
  return out;
}

double f1_score(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw ValidationError("f1_score: " + std::to_string(predictions.size()) +
                          " predictions for " + std::to_string(labels.size()) + " labels");
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("f1_score: labels must be 0 or 1");
    const bool predicted = predictions[i] == 1;
    const bool actual = labels[i] == 1;
    tp += predicted && actual;
    fp += predicted && !actual;
    fn += !predicted && actual;
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace dalign::metric
