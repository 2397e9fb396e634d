#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dalign::gt {

enum class EditOp { kKeep, kDelete, kInsert };

struct Edit {
  EditOp op;
  std::size_t a_index;  // line in the old sequence (keep, delete)
  std::size_t b_index;  // line in the new sequence (keep, insert)
};

// Minimal edit script under the longest-common-subsequence model. Walks both
// sequences front to back: equal heads are kept, otherwise a delete is taken
// whenever it preserves the optimum, else an insert.
std::vector<Edit> line_diff(const std::vector<std::string_view>& a,
                            const std::vector<std::string_view>& b);

std::vector<Edit> line_diff(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct FunctionPair {
  std::string function_id;
  std::string vulnerable_code;
  std::string fixed_code;
};

struct GroundTruth {
  std::string function_id;
  std::vector<std::size_t> vulnerable_lines;  // sorted, 0-based
  std::size_t line_count = 0;

  bool empty() const { return vulnerable_lines.empty(); }
};

// Lines of the vulnerable function that the fix deletes or replaces. Lines
// equal after trimming trailing whitespace are treated as unchanged. Moved
// lines show up as delete + insert and are flagged. Appends a warning to
// `warnings` (when given) if the result is empty.
GroundTruth extract_ground_truth(const FunctionPair& pair,
                                 std::vector<std::string>* warnings = nullptr);

}  // namespace dalign::gt
