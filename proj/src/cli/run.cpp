#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dalign/cli/commands.hpp"
#include "dalign/error.hpp"

namespace dalign::cli {
namespace {

struct Setting {
  const char* key;
  const char* help;
  bool repeatable = false;
  bool is_flag = false;
};

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = {
      {"dataset", "function JSONL: {\"id\",\"code\",\"label\",\"fixed_code\"}"},
      {"vocab", "vocabulary JSON (default <output-dir>/vocab.json)"},
      {"checkpoint", "model checkpoint (default <output-dir>/model.ckpt)"},
      {"relevance", "token relevance JSONL, repeatable (default <output-dir>/relevance.jsonl)",
       true},
      {"attention", "attention tensor JSONL, repeatable", true},
      {"groundtruth", "ground truth JSONL (default <output-dir>/groundtruth.jsonl)"},
      {"results", "results JSONL read by report (default <output-dir>/results.jsonl)"},
      {"output-dir", "directory for every output file (env DALIGN_OUTPUT_DIR)"},
      {"methods", "comma-separated scoring methods", true},
      {"budget", "content tokens kept per function"},
      {"ig-steps", "Integrated Gradients quadrature points"},
      {"layer", "layer for method 'attention': first, last or a 1-based index"},
      {"absolute", "also evaluate absolute-value relevance (-abs methods)", false, true},
      {"seed", "seed for every random choice"},
      {"vocab-size", "target vocabulary size including specials"},
      {"epochs", "training epochs"},
      {"learning-rate", "Adam step size"},
      {"batch-size", "training mini-batch size"},
      {"d-model", "model width"},
      {"heads", "attention heads"},
      {"layers", "encoder layers"},
      {"d-ff", "feed-forward width"},
      {"max-len", "positions including BOS and EOS"},
  };
  return table;
}

using Command = void (*)(const RunConfig&, std::ostream&, std::ostream&);

struct Subcommand {
  const char* name;
  const char* help;
  Command fn;
};

const std::vector<Subcommand>& subcommands() {
  static const std::vector<Subcommand> table = {
      {"extract-gt", "derive vulnerable lines from vulnerable/fixed pairs", cmd_extract_gt},
      {"train-vocab", "learn a byte-level BPE vocabulary", cmd_train_vocab},
      {"train-model", "train the microformer classifier", cmd_train_model},
      {"score", "export token relevance for each method", cmd_score},
      {"evaluate", "line relevance, Detection Alignment and F1", cmd_evaluate},
      {"report", "results table and line heat CSV", cmd_report},
  };
  return table;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const std::string& s : items) {
    if (!out.empty()) out += ',';
    out += s;
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detection Alignment toolkit"};
  app.require_subcommand(1);

  std::string config_file;
  std::map<std::string, std::vector<std::string>> values;
  std::map<std::string, bool> flags;
  std::vector<std::pair<CLI::App*, Command>> commands;
  std::vector<std::pair<std::string, CLI::Option*>> given;

  for (const Subcommand& sc : subcommands()) {
    CLI::App* sub = app.add_subcommand(sc.name, sc.help);
    sub->add_option("--config", config_file, "key = value settings file");
    for (const Setting& s : settings()) {
      const std::string key = std::string(sc.name) + "/" + s.key;
      CLI::Option* opt = nullptr;
      if (s.is_flag) {
        opt = sub->add_flag(std::string("--") + s.key, flags[key], s.help);
      } else if (s.repeatable) {
        opt = sub->add_option(std::string("--") + s.key, values[key], s.help)->delimiter(',');
      } else {
        opt = sub->add_option(std::string("--") + s.key, values[key], s.help)->expected(1);
      }
      given.emplace_back(key, opt);
    }
    commands.emplace_back(sub, sc.fn);
  }

  std::vector<std::string> argv;
  argv.reserve(args.size());
  for (auto it = args.rbegin(); it != args.rend(); ++it) argv.push_back(*it);
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    // Subcommand help is reported as CallForHelp on the parent too.
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 1;
  }

  for (const auto& [sub, fn] : commands) {
    if (!sub->parsed()) continue;
    try {
      RunConfig config;
      if (!config_file.empty()) apply_config_file(config, config_file);
      if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
        config.output_dir = env;
      }
      const std::string prefix = std::string(sub->get_name()) + "/";
      for (const auto& [key, opt] : given) {
        if (key.rfind(prefix, 0) != 0 || opt->count() == 0) continue;
        const std::string name = key.substr(prefix.size());
        if (flags.count(key)) {
          apply_setting(config, name, flags[key] ? "true" : "false");
        } else {
          apply_setting(config, name, join(values[key]));
        }
      }
      fn(config, out, err);
      return 0;
    } catch (const ValidationError& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    } catch (const IoError& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    } catch (const std::filesystem::filesystem_error& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 1;
}

}  // namespace dalign::cli
