#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "dalign/cli/commands.hpp"
#include "dalign/io/records.hpp"

namespace dalign::testing {

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

inline Invocation invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Invocation r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

inline std::filesystem::path write_lines(const std::filesystem::path& path,
                                         const std::vector<io::json>& lines) {
  io::write_file(path, io::to_jsonl(lines));
  return path;
}

inline std::string path_arg(const std::filesystem::path& p) { return p.string(); }

}  // namespace dalign::testing
