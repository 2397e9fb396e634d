#include "dalign/io/records.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "dalign/error.hpp"

namespace dalign::io {
namespace {

const json& require(const json& j, const char* key) {
  if (!j.is_object()) throw ValidationError("record is not a JSON object");
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    throw ValidationError(std::string("missing field \"") + key + "\"");
  }
  return *it;
}

std::string require_string(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_string()) throw ValidationError(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

std::size_t as_index(const json& v, const char* what) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ValidationError(std::string(what) + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::size_t require_index(const json& j, const char* key) {
  return as_index(require(j, key), key);
}

int require_label(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
    throw ValidationError(std::string("field \"") + key + "\" must be 0 or 1");
  }
  return v.get<int>();
}

double require_number(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw ValidationError(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

std::vector<std::size_t> require_index_array(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_array()) throw ValidationError(std::string("field \"") + key + "\" must be an array");
  std::vector<std::size_t> out;
  out.reserve(v.size());
  for (const json& e : v) out.push_back(as_index(e, key));
  return out;
}

template <typename T, typename Parse>
std::vector<T> read_records(const std::filesystem::path& path, Parse parse) {
  std::vector<T> out;
  for (const JsonlLine& line : read_jsonl(path)) {
    try {
      out.push_back(parse(line.value));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line.line_number) + ": " +
                            e.what());
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line.line_number) + ": " +
                            e.what());
    }
  }
  return out;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<JsonlLine> read_jsonl(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<JsonlLine> out;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_number;
    const std::string_view line(text.data() + start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back({line_number, json::parse(line)});
    } catch (const json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_number) +
                            ": malformed JSON: " + e.what());
    }
  }
  return out;
}

DatasetRecord parse_dataset_record(const json& j) {
  DatasetRecord r;
  r.id = require_string(j, "id");
  r.code = require_string(j, "code");
  if (j.contains("label") && !j["label"].is_null()) r.label = require_label(j, "label");
  if (j.contains("fixed_code") && !j["fixed_code"].is_null()) {
    r.fixed_code = require_string(j, "fixed_code");
  }
  return r;
}

std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
  auto records = read_records<DatasetRecord>(path, parse_dataset_record);
  std::set<std::string> seen;
  for (const DatasetRecord& r : records) {
    if (!seen.insert(r.id).second) {
      throw ValidationError(path.string() + ": duplicate id '" + r.id + "'");
    }
  }
  return records;
}

json to_json(const GroundTruthRecord& record) {
  return json{{"id", record.truth.function_id},
              {"vulnerable_lines", record.truth.vulnerable_lines},
              {"line_count", record.truth.line_count},
              {"label", record.label}};
}

GroundTruthRecord parse_groundtruth_record(const json& j) {
  GroundTruthRecord r;
  r.truth.function_id = require_string(j, "id");
  r.truth.vulnerable_lines = require_index_array(j, "vulnerable_lines");
  r.truth.line_count = require_index(j, "line_count");
  if (j.contains("label") && !j["label"].is_null()) r.label = require_label(j, "label");
  std::sort(r.truth.vulnerable_lines.begin(), r.truth.vulnerable_lines.end());
  for (std::size_t line : r.truth.vulnerable_lines) {
    if (line >= r.truth.line_count) {
      throw ValidationError("vulnerable line " + std::to_string(line) + " >= line_count " +
                            std::to_string(r.truth.line_count));
    }
  }
  return r;
}

std::vector<GroundTruthRecord> read_groundtruth(const std::filesystem::path& path) {
  auto records = read_records<GroundTruthRecord>(path, parse_groundtruth_record);
  std::set<std::string> seen;
  for (const GroundTruthRecord& r : records) {
    if (!seen.insert(r.truth.function_id).second) {
      throw ValidationError(path.string() + ": duplicate id '" + r.truth.function_id + "'");
    }
  }
  return records;
}

json to_json(const rel::TokenRelevanceRecord& record) {
  json tokens = json::array();
  for (const rel::TokenScore& s : record.scores) {
    tokens.push_back(json{{"line", s.line}, {"score", s.score}});
  }
  return json{{"id", record.function_id},
              {"method", record.method},
              {"predicted_label", record.predicted_label},
              {"tokens", std::move(tokens)}};
}

rel::TokenRelevanceRecord parse_relevance_record(const json& j) {
  rel::TokenRelevanceRecord r;
  r.function_id = require_string(j, "id");
  r.method = require_string(j, "method");
  if (r.method.empty()) throw ValidationError("field \"method\" must not be empty");
  r.predicted_label = require_label(j, "predicted_label");
  const json& tokens = require(j, "tokens");
  if (!tokens.is_array()) throw ValidationError("field \"tokens\" must be an array");
  r.scores.reserve(tokens.size());
  for (const json& t : tokens) {
    const double score = require_number(t, "score");
    if (!std::isfinite(score)) throw ValidationError("token score must be finite");
    r.scores.push_back({require_index(t, "line"), score});
  }
  return r;
}

std::vector<rel::TokenRelevanceRecord> read_relevance(const std::filesystem::path& path) {
  auto records = read_records<rel::TokenRelevanceRecord>(path, parse_relevance_record);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : records) {
    if (!seen.emplace(r.function_id, r.method).second) {
      throw ValidationError(path.string() + ": duplicate record for id '" + r.function_id +
                            "' and method '" + r.method + "'");
    }
  }
  return records;
}

AttentionRecord parse_attention_record(const json& j) {
  AttentionRecord r;
  r.tensor.function_id = require_string(j, "id");
  r.tensor.layer = require_index(j, "layer");
  r.tensor.heads = require_index(j, "heads");
  r.tensor.seq_len = require_index(j, "seq_len");
  const json& attn = require(j, "attn");
  if (!attn.is_array()) throw ValidationError("field \"attn\" must be an array");
  r.tensor.values.reserve(attn.size());
  for (const json& v : attn) {
    if (!v.is_number()) throw ValidationError("attention values must be numbers");
    r.tensor.values.push_back(v.get<double>());
  }
  r.special_positions = require_index_array(j, "special_positions");
  r.token_lines = require_index_array(j, "token_lines");
  if (j.contains("predicted_label") && !j["predicted_label"].is_null()) {
    r.predicted_label = require_label(j, "predicted_label");
  }
  r.method = j.contains("method") && j["method"].is_string() ? j["method"].get<std::string>()
                                                              : std::string(rel::method::kExternal);
  return r;
}

std::vector<AttentionRecord> read_attention(const std::filesystem::path& path) {
  return read_records<AttentionRecord>(path, parse_attention_record);
}

json to_json(const metric::DAResult& result) {
  json reason = result.excluded ? json(std::string(metric::to_string(result.exclude_reason)))
                                : json(nullptr);
  return json{{"id", result.function_id},
              {"method", result.method},
              {"da", result.da},
              {"intersection", result.intersection_mass},
              {"union", result.union_mass},
              {"predicted_label", result.predicted_label},
              {"excluded", result.excluded},
              {"exclude_reason", std::move(reason)}};
}

metric::DAResult parse_result(const json& j) {
  metric::DAResult r;
  r.function_id = require_string(j, "id");
  r.method = require_string(j, "method");
  r.da = require_number(j, "da");
  r.intersection_mass = require_number(j, "intersection");
  r.union_mass = require_number(j, "union");
  r.predicted_label = require_label(j, "predicted_label");
  const json& excluded = require(j, "excluded");
  if (!excluded.is_boolean()) throw ValidationError("field \"excluded\" must be a boolean");
  r.excluded = excluded.get<bool>();
  if (j.contains("exclude_reason") && j["exclude_reason"].is_string()) {
    r.exclude_reason = metric::exclude_reason_from_string(j["exclude_reason"].get<std::string>());
  }
  if (r.excluded && r.exclude_reason == metric::ExcludeReason::kNone) {
    throw ValidationError("excluded result needs an exclude_reason");
  }
  return r;
}

std::vector<metric::DAResult> read_results(const std::filesystem::path& path) {
  return read_records<metric::DAResult>(path, parse_result);
}

json to_json(const LineHeatRecord& record) {
  return json{{"id", record.id},
              {"method", record.method},
              {"values", record.values},
              {"ground_truth", record.ground_truth}};
}

LineHeatRecord parse_line_heat(const json& j) {
  LineHeatRecord r;
  r.id = require_string(j, "id");
  r.method = require_string(j, "method");
  const json& values = require(j, "values");
  if (!values.is_array()) throw ValidationError("field \"values\" must be an array");
  for (const json& v : values) {
    if (!v.is_number()) throw ValidationError("line values must be numbers");
    r.values.push_back(v.get<double>());
  }
  r.ground_truth = require_index_array(j, "ground_truth");
  return r;
}

std::vector<LineHeatRecord> read_line_heat(const std::filesystem::path& path) {
  return read_records<LineHeatRecord>(path, parse_line_heat);
}

json summary_to_json(const metric::EvalSummary& summary,
                     const std::map<std::string, double>& method_f1) {
  json out = json::object();
  for (const auto& [name, m] : summary.methods) {
    json entry{{"mean_da", m.mean_da ? json(*m.mean_da) : json(nullptr)},
               {"n_evaluated", m.n_evaluated},
               {"n_excluded", m.n_excluded},
               {"n_false_negative", m.n_false_negative}};
    if (const auto it = method_f1.find(name); it != method_f1.end()) entry["f1"] = it->second;
    out[name] = std::move(entry);
  }
  out["f1"] = summary.f1 ? json(*summary.f1) : json(nullptr);
  return out;
}

std::string to_jsonl(const std::vector<json>& records) {
  std::string out;
  for (const json& r : records) {
    out += r.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace dalign::io
