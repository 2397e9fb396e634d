#include "dalign/groundtruth.hpp"

#include <algorithm>

#include "dalign/text.hpp"

namespace dalign::gt {
namespace {

template <typename Line>
std::vector<Edit> diff_impl(const std::vector<Line>& a, const std::vector<Line>& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  // suffix[i][j] = LCS length of a[i..] and b[j..]
  std::vector<std::size_t> suffix((n + 1) * (m + 1), 0);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return suffix[i * (m + 1) + j]; };
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      at(i, j) = a[i] == b[j] ? at(i + 1, j + 1) + 1 : std::max(at(i + 1, j), at(i, j + 1));
    }
  }

  std::vector<Edit> script;
  script.reserve(n + m);
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && a[i] == b[j]) {
      script.push_back({EditOp::kKeep, i++, j++});
    } else if (i < n && (j == m || at(i + 1, j) == at(i, j))) {
      script.push_back({EditOp::kDelete, i++, j});
    } else {
      script.push_back({EditOp::kInsert, i, j++});
    }
  }
  return script;
}

}  // namespace

std::vector<Edit> line_diff(const std::vector<std::string_view>& a,
                            const std::vector<std::string_view>& b) {
  return diff_impl(a, b);
}

std::vector<Edit> line_diff(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return diff_impl(a, b);
}

GroundTruth extract_ground_truth(const FunctionPair& pair, std::vector<std::string>* warnings) {
  auto trimmed = [](std::string_view code) {
    std::vector<std::string_view> lines = split_lines(code);
    for (auto& line : lines) line = trim_trailing_whitespace(line);
    return lines;
  };
  const std::vector<std::string_view> before = trimmed(pair.vulnerable_code);
  const std::vector<std::string_view> after = trimmed(pair.fixed_code);

  GroundTruth out;
  out.function_id = pair.function_id;
  out.line_count = before.size();
  for (const Edit& e : line_diff(before, after)) {
    if (e.op == EditOp::kDelete) out.vulnerable_lines.push_back(e.a_index);
  }
  if (out.empty() && warnings != nullptr) {
    warnings->push_back("function '" + pair.function_id +
                        "': fix deletes no line, ground truth is empty");
  }
  return out;
}

}  // namespace dalign::gt
