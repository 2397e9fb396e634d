#pragma once

// JSONL wire formats. Every reader reports the file and 1-based line number
// of the first malformed record. Unknown fields are ignored so producers can
// attach provenance.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dalign/groundtruth.hpp"
#include "dalign/metric.hpp"
#include "dalign/relevance.hpp"

namespace dalign::io {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

struct JsonlLine {
  std::size_t line_number = 0;
  json value;
};

// Blank lines are skipped.
std::vector<JsonlLine> read_jsonl(const std::filesystem::path& path);

// {"id","code","label","fixed_code"}; label and fixed_code are optional here,
// commands that need them check for them.
struct DatasetRecord {
  std::string id;
  std::string code;
  std::optional<int> label;
  std::optional<std::string> fixed_code;
};

DatasetRecord parse_dataset_record(const json& j);
std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path);

// {"id","vulnerable_lines":[..],"line_count":L} plus an optional "label"
// (0 marks a benign function used only for F1; absent means vulnerable).
struct GroundTruthRecord {
  gt::GroundTruth truth;
  int label = 1;
};

json to_json(const GroundTruthRecord& record);
GroundTruthRecord parse_groundtruth_record(const json& j);
std::vector<GroundTruthRecord> read_groundtruth(const std::filesystem::path& path);

// {"id","method","predicted_label":0|1,"tokens":[{"line":l,"score":s},...]}
json to_json(const rel::TokenRelevanceRecord& record);
rel::TokenRelevanceRecord parse_relevance_record(const json& j);
// Duplicate (id, method) pairs are a ValidationError.
std::vector<rel::TokenRelevanceRecord> read_relevance(const std::filesystem::path& path);

// {"id","layer","heads","seq_len","attn":[...],"special_positions":[..],
//  "token_lines":[..]} with optional "predicted_label" (default 1) and
// "method" (default "external").
struct AttentionRecord {
  rel::AttentionTensor tensor;
  std::vector<std::size_t> special_positions;
  std::vector<std::size_t> token_lines;
  int predicted_label = 1;
  std::string method;
};

AttentionRecord parse_attention_record(const json& j);
std::vector<AttentionRecord> read_attention(const std::filesystem::path& path);

// {"id","method","da","intersection","union","predicted_label","excluded","exclude_reason"}
json to_json(const metric::DAResult& result);
metric::DAResult parse_result(const json& j);
std::vector<metric::DAResult> read_results(const std::filesystem::path& path);

// {"id","method","values":[..],"ground_truth":[..]}: per-line data behind the
// report heat map.
struct LineHeatRecord {
  std::string id;
  std::string method;
  std::vector<double> values;
  std::vector<std::size_t> ground_truth;
};

json to_json(const LineHeatRecord& record);
LineHeatRecord parse_line_heat(const json& j);
std::vector<LineHeatRecord> read_line_heat(const std::filesystem::path& path);

// {"<method>":{"mean_da","n_evaluated","n_excluded","n_false_negative","f1"},...,"f1":..}
json summary_to_json(const metric::EvalSummary& summary,
                     const std::map<std::string, double>& method_f1);

// One compact JSON document per line, '\n'-terminated.
std::string to_jsonl(const std::vector<json>& records);

}  // namespace dalign::io
