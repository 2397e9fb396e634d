#pragma once

// Subcommands. Each reads its inputs from a RunConfig, writes its outputs
// into config.output_dir, prints progress to `out` and warnings to `err`.
// Errors surface as ValidationError (exit 1) or IoError (exit 2).

#include <iosfwd>
#include <string>
#include <vector>

#include "dalign/cli/config.hpp"

namespace dalign::cli {

// Dataset {"id","code","label"?,"fixed_code"?} -> groundtruth.jsonl.
// Vulnerable records (label 1 or absent) need fixed_code and are skipped with
// a warning without it; benign records are written with no lines and label 0.
void cmd_extract_gt(const RunConfig& config, std::ostream& out, std::ostream& err);

// Dataset code -> vocab.json.
void cmd_train_vocab(const RunConfig& config, std::ostream& out, std::ostream& err);

// Labeled dataset + vocab -> model.ckpt.
void cmd_train_model(const RunConfig& config, std::ostream& out, std::ostream& err);

// Dataset + vocab + checkpoint -> relevance.jsonl, one record per function
// and method, functions in input order. Methods: attention-first,
// attention-last, attention (layer picked by config.layer) and
// integrated-gradients.
void cmd_score(const RunConfig& config, std::ostream& out, std::ostream& err);

// Relevance (and attention tensor) files + groundtruth -> results.jsonl,
// summary.json and line_relevance.jsonl.
void cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err);

// results.jsonl (+ summary.json and line_relevance.jsonl next to it when
// present) -> report.txt and line_heat.csv.
void cmd_report(const RunConfig& config, std::ostream& out, std::ostream& err);

// Method tag produced for `method` under `layer` ("attention" resolves to
// attention-first, attention-last or attention-layer<m>), and the 1-based
// layer it reads. Throws ValidationError on an unknown method or layer.
struct ResolvedMethod {
  std::string tag;
  std::size_t layer = 0;  // 0 for integrated-gradients
};
ResolvedMethod resolve_method(const std::string& method, const std::string& layer,
                              std::size_t model_layers);

// Full command line, argv[0] excluded. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dalign::cli
