#pragma once

// From per-token relevance (any producer) to a per-line fuzzy membership
// vector, plus the attention-based token relevance.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dalign::rel {

namespace method {
inline constexpr std::string_view kAttentionFirst = "attention-first";
inline constexpr std::string_view kAttentionLast = "attention-last";
inline constexpr std::string_view kAttnLrp = "attnlrp";
inline constexpr std::string_view kIntegratedGradients = "integrated-gradients";
inline constexpr std::string_view kExternal = "external";
inline constexpr std::string_view kAbsoluteSuffix = "-abs";
}  // namespace method

struct TokenScore {
  std::size_t line = 0;
  double score = 0.0;
  friend bool operator==(const TokenScore&, const TokenScore&) = default;
};

// One entry per content token of the (possibly truncated) encoding.
struct TokenRelevanceRecord {
  std::string function_id;
  std::string method;
  int predicted_label = 0;
  std::vector<TokenScore> scores;
};

struct LineRelevanceVector {
  std::string function_id;
  std::vector<double> values;  // length L, each in [0, 1]
  std::string method;
};

// Softmax attention of one encoder layer, stored row-major as
// values[(h * seq_len + query) * seq_len + key].
struct AttentionTensor {
  std::string function_id;
  std::size_t layer = 0;  // 1-based encoder layer
  std::size_t heads = 0;
  std::size_t seq_len = 0;
  std::vector<double> values;

  double at(std::size_t head, std::size_t query, std::size_t key) const {
    return values[(head * seq_len + query) * seq_len + key];
  }
  std::span<const double> row(std::size_t head, std::size_t query) const {
    return {values.data() + (head * seq_len + query) * seq_len, seq_len};
  }

  // Throws ValidationError("... not a softmax output") if an entry is negative
  // or a row does not sum to 1 within `tolerance`; also checks the shape.
  void validate(double tolerance = 1e-6) const;
};

// Total attention each position receives over all heads and query positions:
// out[i] = sum_h sum_j A[h, j, i]. The outgoing sum over keys is identically 1
// per head, so the incoming direction is the informative one.
std::vector<double> incoming_attention(const AttentionTensor& attn);

// Incoming attention per content position. `special_positions` (BOS/EOS/PAD)
// are dropped; `content_lines` gives the source line of each remaining
// position in order. The result has no method tag or prediction set.
TokenRelevanceRecord attention_token_relevance(const AttentionTensor& attn,
                                               std::span<const std::size_t> content_lines,
                                               std::span<const std::size_t> special_positions);

// Sum of token scores per line; lines without tokens (including lines lost to
// truncation) are 0. Throws ValidationError if a token's line is >= line_count.
std::vector<double> aggregate_lines(const TokenRelevanceRecord& record, std::size_t line_count);

// Min-max rescaling into [0, 1]; a constant vector maps to all zeros.
std::vector<double> rescale(std::span<const double> raw);

TokenRelevanceRecord absolute_variant(const TokenRelevanceRecord& record);

// aggregate_lines followed by rescale.
LineRelevanceVector line_relevance(const TokenRelevanceRecord& record, std::size_t line_count);

}  // namespace dalign::rel
