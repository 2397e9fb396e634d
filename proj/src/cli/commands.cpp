#include "dalign/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

#include "dalign/checkpoint.hpp"
#include "dalign/error.hpp"
#include "dalign/groundtruth.hpp"
#include "dalign/io/records.hpp"
#include "dalign/metric.hpp"
#include "dalign/microformer.hpp"
#include "dalign/relevance.hpp"
#include "dalign/text.hpp"
#include "dalign/tokenizer.hpp"

namespace dalign::cli {
namespace {

using io::json;

void require_path(const std::filesystem::path& path, const char* flag) {
  if (path.empty()) throw ValidationError(std::string("missing required setting --") + flag);
}

void ensure_output_dir(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + config.output_dir.string());
}

tok::Vocabulary load_vocab(const RunConfig& config) {
  return tok::Vocabulary::from_json(io::read_file(config.vocab_path()));
}

std::string format_fixed(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

// Formats a double so it reads back to the same value.
std::string format_exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

ResolvedMethod resolve_method(const std::string& method, const std::string& layer,
                              std::size_t model_layers) {
  if (method == rel::method::kIntegratedGradients) return {method, 0};
  if (method == rel::method::kAttentionFirst) return {method, 1};
  if (method == rel::method::kAttentionLast) return {method, model_layers};
  if (method == "attention") {
    if (layer == "first") return {std::string(rel::method::kAttentionFirst), 1};
    if (layer == "last") return {std::string(rel::method::kAttentionLast), model_layers};
    std::size_t m = 0;
    try {
      std::size_t used = 0;
      m = std::stoul(layer, &used);
      if (used != layer.size()) m = 0;
    } catch (const std::exception&) {
      m = 0;
    }
    if (m == 0 || m > model_layers) {
      throw ValidationError("attention layer '" + layer + "' outside 1.." +
                            std::to_string(model_layers));
    }
    return {"attention-layer" + std::to_string(m), m};
  }
  throw ValidationError("unknown scoring method '" + method + "'");
}

void cmd_extract_gt(const RunConfig& config, std::ostream& out, std::ostream& err) {
  require_path(config.dataset, "dataset");
  const auto records = io::read_dataset(config.dataset);
  std::vector<json> lines;
  std::size_t skipped = 0;
  std::size_t empty = 0;
  for (const io::DatasetRecord& r : records) {
    io::GroundTruthRecord g;
    if (r.label && *r.label == 0) {
      g.truth.function_id = r.id;
      g.truth.line_count = count_lines(r.code);
      g.label = 0;
      lines.push_back(io::to_json(g));
      continue;
    }
    if (!r.fixed_code) {
      err << "warning: " << r.id << ": no fixed_code, record skipped\n";
      ++skipped;
      continue;
    }
    std::vector<std::string> warnings;
    g.truth = gt::extract_ground_truth({r.id, r.code, *r.fixed_code}, &warnings);
    for (const std::string& w : warnings) err << "warning: " << w << '\n';
    if (g.truth.empty()) ++empty;
    lines.push_back(io::to_json(g));
  }
  ensure_output_dir(config);
  const auto path = config.output(file::kGroundTruth);
  io::write_file(path, io::to_jsonl(lines));
  out << "wrote " << lines.size() << " records to " << path.string() << " (" << skipped
      << " skipped, " << empty << " with empty ground truth)\n";
}

void cmd_train_vocab(const RunConfig& config, std::ostream& out, std::ostream&) {
  require_path(config.dataset, "dataset");
  const auto records = io::read_dataset(config.dataset);
  std::vector<std::string> corpus;
  corpus.reserve(records.size());
  for (const io::DatasetRecord& r : records) corpus.push_back(r.code);
  const tok::Vocabulary vocab = tok::train_bpe(corpus, config.vocab_size);
  ensure_output_dir(config);
  const auto path = config.output(file::kVocab);
  io::write_file(path, vocab.to_json());
  out << "wrote vocabulary of " << vocab.size() << " ids (" << vocab.merges().size()
      << " merges) to " << path.string() << '\n';
}

void cmd_train_model(const RunConfig& config, std::ostream& out, std::ostream&) {
  require_path(config.dataset, "dataset");
  const auto records = io::read_dataset(config.dataset);
  const tok::Vocabulary vocab = load_vocab(config);
  if (config.budget + 2 > config.max_len) {
    throw ValidationError("budget " + std::to_string(config.budget) +
                          " plus BOS/EOS exceeds max-len " + std::to_string(config.max_len));
  }
  std::vector<nn::LabeledSequence> data;
  data.reserve(records.size());
  for (const io::DatasetRecord& r : records) {
    if (!r.label) throw ValidationError("record '" + r.id + "' has no label");
    data.push_back({tok::encode(vocab, r.code, config.budget, r.id).ids(), *r.label});
  }

  nn::Dims dims;
  dims.vocab = vocab.size();
  dims.d_model = config.d_model;
  dims.heads = config.heads;
  dims.layers = config.layers;
  dims.d_ff = config.d_ff;
  dims.max_len = config.max_len;
  dims.validate();

  nn::TrainConfig train;
  train.epochs = config.epochs;
  train.learning_rate = config.learning_rate;
  train.seed = config.seed;
  train.batch_size = config.batch_size;

  nn::TrainReport report;
  const nn::ModelParams init = nn::ModelParams::random(dims, vocab.specials(), config.seed);
  const nn::ModelParams trained = nn::train_toy(init, data, train, &report);
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    out << "epoch " << e + 1 << " loss " << format_fixed(report.epoch_loss[e], 6)
        << " val_f1 " << format_fixed(report.validation_f1[e]) << '\n';
  }
  out << "kept epoch " << report.best_epoch << " (val_f1 " << format_fixed(report.best_f1)
      << ")\n";

  ensure_output_dir(config);
  const auto path = config.output(file::kCheckpoint);
  nn::save_checkpoint(path, trained, {config.seed, vocab.fingerprint()});
  out << "wrote checkpoint to " << path.string() << '\n';
}

void cmd_score(const RunConfig& config, std::ostream& out, std::ostream&) {
  require_path(config.dataset, "dataset");
  if (config.methods.empty()) throw ValidationError("method list is empty");
  const auto records = io::read_dataset(config.dataset);
  const tok::Vocabulary vocab = load_vocab(config);
  const nn::Checkpoint ckpt = nn::load_checkpoint(config.checkpoint_path());
  if (ckpt.header.vocab_hash != vocab.fingerprint()) {
    throw ValidationError("checkpoint " + config.checkpoint_path().string() +
                          " was trained with a different vocabulary");
  }
  const nn::ModelParams& params = ckpt.params;
  if (params.dims.vocab != vocab.size()) {
    throw ValidationError("checkpoint vocabulary size does not match " +
                          config.vocab_path().string());
  }
  if (config.budget + 2 > params.dims.max_len) {
    throw ValidationError("budget " + std::to_string(config.budget) +
                          " plus BOS/EOS exceeds the checkpoint max_len " +
                          std::to_string(params.dims.max_len));
  }

  std::vector<ResolvedMethod> methods;
  std::set<std::string> tags;
  for (const std::string& m : config.methods) {
    ResolvedMethod resolved = resolve_method(m, config.layer, params.dims.layers);
    if (!tags.insert(resolved.tag).second) {
      throw ValidationError("method '" + resolved.tag + "' requested twice");
    }
    methods.push_back(std::move(resolved));
  }

  nn::IGConfig ig;
  ig.steps = config.ig_steps;
  std::vector<json> lines;
  for (const io::DatasetRecord& r : records) {
    const tok::TokenizedFunction fn = tok::encode(vocab, r.code, config.budget, r.id);
    for (const ResolvedMethod& m : methods) {
      rel::TokenRelevanceRecord rec =
          m.layer == 0 ? nn::integrated_gradients(params, fn, ig)
                       : nn::attention_relevance(params, fn, m.layer, m.tag);
      rec.function_id = r.id;
      json j = io::to_json(rec);
      j["truncated"] = fn.truncated;
      lines.push_back(std::move(j));
    }
  }
  ensure_output_dir(config);
  const auto path = config.output(file::kRelevance);
  io::write_file(path, io::to_jsonl(lines));
  out << "wrote " << lines.size() << " relevance records to " << path.string() << '\n';
}

void cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::map<std::string, io::GroundTruthRecord> truth;
  std::vector<std::string> truth_order;
  for (io::GroundTruthRecord& g : io::read_groundtruth(config.groundtruth_path())) {
    truth_order.push_back(g.truth.function_id);
    truth.emplace(g.truth.function_id, std::move(g));
  }

  std::vector<rel::TokenRelevanceRecord> inputs;
  std::set<std::pair<std::string, std::string>> seen;
  auto add_input = [&](rel::TokenRelevanceRecord rec, const std::string& source) {
    if (!seen.emplace(rec.function_id, rec.method).second) {
      throw ValidationError(source + ": duplicate record for id '" + rec.function_id +
                            "' and method '" + rec.method + "'");
    }
    inputs.push_back(std::move(rec));
  };
  for (const auto& path : config.relevance_paths()) {
    for (auto& rec : io::read_relevance(path)) add_input(std::move(rec), path.string());
  }
  for (const auto& path : config.attention) {
    for (const io::AttentionRecord& a : io::read_attention(path)) {
      try {
        a.tensor.validate();
      } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + a.tensor.function_id + ": " + e.what());
      }
      rel::TokenRelevanceRecord rec =
          rel::attention_token_relevance(a.tensor, a.token_lines, a.special_positions);
      rec.function_id = a.tensor.function_id;
      rec.method = a.method;
      rec.predicted_label = a.predicted_label;
      add_input(std::move(rec), path.string());
    }
  }
  if (config.absolute) {
    const std::size_t n = inputs.size();
    for (std::size_t i = 0; i < n; ++i) {
      rel::TokenRelevanceRecord abs = rel::absolute_variant(inputs[i]);
      add_input(std::move(abs), "absolute variants");
    }
  }

  std::vector<metric::DAResult> results;
  std::vector<json> heat;
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> per_method;
  std::vector<std::string> id_order;
  std::map<std::string, int> first_prediction;
  std::set<std::string> missing_warned;
  std::set<std::string> scored_ids;

  for (const rel::TokenRelevanceRecord& rec : inputs) {
    const auto it = truth.find(rec.function_id);
    if (it == truth.end()) {
      if (missing_warned.insert(rec.function_id).second) {
        err << "warning: " << rec.function_id << ": no ground truth, skipped\n";
      }
      continue;
    }
    const io::GroundTruthRecord& g = it->second;
    scored_ids.insert(rec.function_id);
    auto& [preds, labels] = per_method[rec.method];
    preds.push_back(rec.predicted_label);
    labels.push_back(g.label);
    if (first_prediction.emplace(rec.function_id, rec.predicted_label).second) {
      id_order.push_back(rec.function_id);
    }
    if (g.label == 0) continue;

    rel::LineRelevanceVector lines;
    try {
      lines = rel::line_relevance(rec, g.truth.line_count);
    } catch (const ValidationError& e) {
      throw ValidationError(rec.function_id + " (" + rec.method + "): " + e.what());
    }
    const metric::DAResult r =
        metric::detection_alignment(lines, metric::fuzzify_ground_truth(g.truth),
                                    rec.predicted_label);
    results.push_back(r);
    heat.push_back(io::to_json(
        io::LineHeatRecord{rec.function_id, rec.method, lines.values, g.truth.vulnerable_lines}));
  }
  for (const std::string& id : truth_order) {
    if (!scored_ids.count(id)) err << "warning: " << id << ": no relevance record, skipped\n";
  }

  metric::EvalSummary summary = metric::aggregate(results);
  std::map<std::string, double> method_f1;
  for (const auto& [name, pl] : per_method) {
    method_f1[name] = metric::f1_score(pl.first, pl.second);
    summary.methods.try_emplace(name);
  }
  if (!id_order.empty()) {
    std::vector<int> preds;
    std::vector<int> labels;
    for (const std::string& id : id_order) {
      preds.push_back(first_prediction.at(id));
      labels.push_back(truth.at(id).label);
    }
    summary.f1 = metric::f1_score(preds, labels);
  }

  std::vector<json> result_lines;
  result_lines.reserve(results.size());
  for (const metric::DAResult& r : results) result_lines.push_back(io::to_json(r));

  ensure_output_dir(config);
  io::write_file(config.output(file::kResults), io::to_jsonl(result_lines));
  io::write_file(config.output(file::kSummary),
                 io::summary_to_json(summary, method_f1).dump(2) + "\n");
  io::write_file(config.output(file::kLineRelevance), io::to_jsonl(heat));

  for (const auto& [name, m] : summary.methods) {
    out << name << ": mean DA " << (m.mean_da ? format_fixed(*m.mean_da) : std::string("n/a"))
        << " over " << m.n_evaluated << " (" << m.n_excluded << " excluded, "
        << m.n_false_negative << " false negatives)\n";
  }
  out << "F1 " << (summary.f1 ? format_fixed(*summary.f1) : std::string("n/a")) << '\n';
}

void cmd_report(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto results_path = config.results_path();
  const auto results = io::read_results(results_path);
  const auto dir = results_path.parent_path();

  std::optional<json> summary_json;
  if (const auto p = dir / file::kSummary; std::filesystem::exists(p)) {
    try {
      summary_json = json::parse(io::read_file(p));
    } catch (const json::exception& e) {
      throw ValidationError(p.string() + ": malformed JSON: " + e.what());
    }
  }

  const metric::EvalSummary summary = metric::aggregate(results);
  std::vector<std::string> methods;
  for (const metric::DAResult& r : results) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
  }

  auto f1_of = [&](const std::string& method) -> std::string {
    if (!summary_json || !summary_json->contains(method)) return "n/a";
    const json& entry = (*summary_json)[method];
    if (!entry.is_object() || !entry.contains("f1") || !entry["f1"].is_number()) return "n/a";
    return format_fixed(entry["f1"].get<double>());
  };

  std::vector<std::vector<std::string>> rows = {{"metric"}, {"mean DA"}, {"F1"},
                                                {"evaluated"}, {"excluded"},
                                                {"false negatives"}};
  for (const std::string& m : methods) {
    const metric::MethodSummary& s = summary.methods.at(m);
    rows[0].push_back(m);
    rows[1].push_back(s.mean_da ? format_fixed(*s.mean_da) : "n/a");
    rows[2].push_back(f1_of(m));
    rows[3].push_back(std::to_string(s.n_evaluated));
    rows[4].push_back(std::to_string(s.n_excluded));
    rows[5].push_back(std::to_string(s.n_false_negative));
  }
  std::vector<std::size_t> widths(rows[0].size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::ostringstream table;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      line += row[c];
      if (c + 1 < row.size()) line.append(widths[c] - row[c].size(), ' ');
    }
    table << line << '\n';
  }
  if (summary_json && summary_json->contains("f1") && (*summary_json)["f1"].is_number()) {
    table << "overall F1: " << format_fixed((*summary_json)["f1"].get<double>()) << '\n';
  }

  std::set<std::pair<std::string, std::string>> reported;
  for (const metric::DAResult& r : results) reported.emplace(r.function_id, r.method);
  std::string csv = "id,method,line,relevance,ground_truth\n";
  std::size_t csv_rows = 0;
  if (const auto p = dir / file::kLineRelevance; std::filesystem::exists(p)) {
    for (const io::LineHeatRecord& h : io::read_line_heat(p)) {
      if (!reported.count({h.id, h.method})) continue;
      const std::set<std::size_t> vulnerable(h.ground_truth.begin(), h.ground_truth.end());
      for (std::size_t l = 0; l < h.values.size(); ++l) {
        csv += csv_field(h.id) + ',' + csv_field(h.method) + ',' + std::to_string(l) + ',' + format_exact(h.values[l]) +
               ',' + (vulnerable.count(l) ? "1" : "0") + '\n';
        ++csv_rows;
      }
    }
  } else if (!results.empty()) {
    err << "warning: " << p.string() << " not found, heat map data is empty\n";
  }

  ensure_output_dir(config);
  io::write_file(config.output(file::kReport), table.str());
  io::write_file(config.output(file::kHeatCsv), csv);
  out << table.str();
  out << "wrote " << config.output(file::kReport).string() << " and "
      << config.output(file::kHeatCsv).string() << " (" << csv_rows << " rows)\n";
}

}  // namespace dalign::cli
