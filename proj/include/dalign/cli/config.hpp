#pragma once

// Run configuration shared by every subcommand.
//
// Config file format: one `key = value` per line, `#` starts a comment, blank
// lines are ignored. Keys are the long flag names without dashes, with '-'
// and '_' interchangeable (`ig-steps = 128`, `ig_steps = 128`). List values
// are comma-separated. Precedence, lowest first: defaults, config file,
// DALIGN_OUTPUT_DIR (output dir only), command-line flags.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dalign::cli {

inline constexpr const char* kOutputDirEnv = "DALIGN_OUTPUT_DIR";

struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path vocab;
  std::filesystem::path checkpoint;
  std::vector<std::filesystem::path> relevance;
  std::vector<std::filesystem::path> attention;
  std::filesystem::path groundtruth;
  std::filesystem::path results;
  std::filesystem::path output_dir = ".";

  std::vector<std::string> methods = {"attention-first", "attention-last",
                                      "integrated-gradients"};
  std::size_t budget = 510;
  std::size_t ig_steps = 64;
  std::string layer = "first";  // first | last | 1-based index, used by method "attention"
  bool absolute = false;
  std::uint64_t seed = 0;

  std::size_t vocab_size = 8192;
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t d_ff = 64;
  std::size_t max_len = 512;

  // Inputs default to the conventional file names inside output_dir.
  std::filesystem::path dataset_path() const { return dataset; }
  std::filesystem::path vocab_path() const;
  std::filesystem::path checkpoint_path() const;
  std::vector<std::filesystem::path> relevance_paths() const;
  std::filesystem::path groundtruth_path() const;
  std::filesystem::path results_path() const;
  std::filesystem::path output(std::string_view file_name) const { return output_dir / file_name; }
};

namespace file {
inline constexpr std::string_view kGroundTruth = "groundtruth.jsonl";
inline constexpr std::string_view kVocab = "vocab.json";
inline constexpr std::string_view kCheckpoint = "model.ckpt";
inline constexpr std::string_view kRelevance = "relevance.jsonl";
inline constexpr std::string_view kResults = "results.jsonl";
inline constexpr std::string_view kSummary = "summary.json";
inline constexpr std::string_view kLineRelevance = "line_relevance.jsonl";
inline constexpr std::string_view kReport = "report.txt";
inline constexpr std::string_view kHeatCsv = "line_heat.csv";
}  // namespace file

// Sets one field from its textual value. Throws ValidationError on an unknown
// key or an unparsable value.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

// Parses the key-value format above.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);

void apply_config_file(RunConfig& config, const std::filesystem::path& path);

// Keys accepted by apply_setting, in canonical (dashed) spelling.
const std::vector<std::string>& setting_keys();

}  // namespace dalign::cli
