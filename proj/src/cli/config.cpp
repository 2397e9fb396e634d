#include "dalign/cli/config.hpp"

#include <algorithm>
#include <charconv>

#include "dalign/error.hpp"
#include "dalign/io/records.hpp"

namespace dalign::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string canonical_key(std::string_view key) {
  std::string out(trim(key));
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    std::size_t comma = value.find(',', start);
    if (comma == std::string_view::npos) comma = value.size();
    const std::string_view item = trim(value.substr(start, comma - start));
    if (!item.empty()) out.emplace_back(item);
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_unsigned(std::string_view key, std::string_view value) {
  value = trim(value);
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("setting '" + std::string(key) + "': expected a non-negative integer, got '" +
                          std::string(value) + "'");
  }
  return out;
}

std::size_t parse_positive(std::string_view key, std::string_view value) {
  const auto out = parse_unsigned<std::size_t>(key, value);
  if (out == 0) throw ValidationError("setting '" + std::string(key) + "' must be positive");
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  const std::string text(trim(value));
  try {
    std::size_t used = 0;
    const double out = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return out;
  } catch (const std::exception&) {
    throw ValidationError("setting '" + std::string(key) + "': expected a number, got '" + text +
                          "'");
  }
}

bool parse_bool(std::string_view key, std::string_view value) {
  const std::string_view v = trim(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("setting '" + std::string(key) + "': expected true or false");
}

std::vector<std::filesystem::path> to_paths(const std::vector<std::string>& items) {
  return {items.begin(), items.end()};
}

}  // namespace

std::filesystem::path RunConfig::vocab_path() const {
  return vocab.empty() ? output(file::kVocab) : vocab;
}
std::filesystem::path RunConfig::checkpoint_path() const {
  return checkpoint.empty() ? output(file::kCheckpoint) : checkpoint;
}
std::vector<std::filesystem::path> RunConfig::relevance_paths() const {
  if (!relevance.empty() || !attention.empty()) return relevance;
  return {output(file::kRelevance)};
}
std::filesystem::path RunConfig::groundtruth_path() const {
  return groundtruth.empty() ? output(file::kGroundTruth) : groundtruth;
}
std::filesystem::path RunConfig::results_path() const {
  return results.empty() ? output(file::kResults) : results;
}

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys = {
      "dataset",   "vocab",         "checkpoint", "relevance", "attention", "groundtruth",
      "results",   "output-dir",    "methods",    "budget",    "ig-steps",  "layer",
      "absolute",  "seed",          "vocab-size", "epochs",    "learning-rate",
      "batch-size", "d-model",      "heads",      "layers",    "d-ff",      "max-len"};
  return keys;
}

void apply_setting(RunConfig& c, std::string_view raw_key, std::string_view raw_value) {
  const std::string key = canonical_key(raw_key);
  const std::string value(trim(raw_value));
  if (key == "dataset") c.dataset = value;
  else if (key == "vocab") c.vocab = value;
  else if (key == "checkpoint") c.checkpoint = value;
  else if (key == "relevance") c.relevance = to_paths(split_list(value));
  else if (key == "attention") c.attention = to_paths(split_list(value));
  else if (key == "groundtruth") c.groundtruth = value;
  else if (key == "results") c.results = value;
  else if (key == "output-dir") c.output_dir = value;
  else if (key == "methods") {
    c.methods = split_list(value);
    if (c.methods.empty()) throw ValidationError("setting 'methods' must list at least one method");
  } else if (key == "budget") c.budget = parse_positive(key, value);
  else if (key == "ig-steps") c.ig_steps = parse_positive(key, value);
  else if (key == "layer") {
    if (value != "first" && value != "last") parse_positive(key, value);
    c.layer = value;
  } else if (key == "absolute") c.absolute = parse_bool(key, value);
  else if (key == "seed") c.seed = parse_unsigned<std::uint64_t>(key, value);
  else if (key == "vocab-size") c.vocab_size = parse_positive(key, value);
  else if (key == "epochs") c.epochs = parse_unsigned<std::size_t>(key, value);
  else if (key == "learning-rate") {
    c.learning_rate = parse_double(key, value);
    if (c.learning_rate < 0.0) throw ValidationError("setting 'learning-rate' must be >= 0");
  } else if (key == "batch-size") c.batch_size = parse_positive(key, value);
  else if (key == "d-model") c.d_model = parse_positive(key, value);
  else if (key == "heads") c.heads = parse_positive(key, value);
  else if (key == "layers") c.layers = parse_positive(key, value);
  else if (key == "d-ff") c.d_ff = parse_positive(key, value);
  else if (key == "max-len") c.max_len = parse_positive(key, value);
  else throw ValidationError("unknown setting '" + std::string(raw_key) + "'");
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_number;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || trim(line.substr(0, eq)).empty()) {
      throw ValidationError("config line " + std::to_string(line_number) +
                            ": expected 'key = value'");
    }
    out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  try {
    for (const auto& [key, value] : parse_config_text(text)) apply_setting(config, key, value);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace dalign::cli
