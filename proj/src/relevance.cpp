#include "dalign/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "dalign/error.hpp"
#include "dalign/simd/kernels.hpp"

namespace dalign::rel {

void AttentionTensor::validate(double tolerance) const {
  if (heads == 0 || seq_len == 0) {
    throw ValidationError("attention tensor '" + function_id + "': empty shape");
  }
  if (values.size() != heads * seq_len * seq_len) {
    throw ValidationError("attention tensor '" + function_id + "': expected " +
                          std::to_string(heads * seq_len * seq_len) + " values, got " +
                          std::to_string(values.size()));
  }
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t q = 0; q < seq_len; ++q) {
      const auto r = row(h, q);
      for (double v : r) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw ValidationError("attention tensor '" + function_id +
                                "': negative or non-finite entry, not a softmax output");
        }
      }
      const double total = simd::sum(r);
      if (std::abs(total - 1.0) > tolerance) {
        throw ValidationError("attention tensor '" + function_id + "': row (head " +
                              std::to_string(h) + ", query " + std::to_string(q) +
                              ") sums to " + std::to_string(total) + ", not a softmax output");
      }
    }
  }
}

std::vector<double> incoming_attention(const AttentionTensor& attn) {
  attn.validate();
  std::vector<double> received(attn.seq_len, 0.0);
  for (std::size_t h = 0; h < attn.heads; ++h) {
    for (std::size_t q = 0; q < attn.seq_len; ++q) simd::add_into(attn.row(h, q), received);
  }
  return received;
}

TokenRelevanceRecord attention_token_relevance(const AttentionTensor& attn,
                                               std::span<const std::size_t> content_lines,
                                               std::span<const std::size_t> special_positions) {
  const std::vector<double> received = incoming_attention(attn);
  const std::unordered_set<std::size_t> special(special_positions.begin(),
                                                special_positions.end());
  for (std::size_t p : special) {
    if (p >= attn.seq_len) {
      throw ValidationError("attention tensor '" + attn.function_id +
                            "': special position out of range");
    }
  }
  if (content_lines.size() != attn.seq_len - special.size()) {
    throw ValidationError("attention tensor '" + attn.function_id + "': " +
                          std::to_string(content_lines.size()) + " token lines for " +
                          std::to_string(attn.seq_len - special.size()) + " content positions");
  }
  TokenRelevanceRecord out;
  out.function_id = attn.function_id;
  out.scores.reserve(content_lines.size());
  std::size_t next = 0;
  for (std::size_t pos = 0; pos < attn.seq_len; ++pos) {
    if (special.contains(pos)) continue;
    out.scores.push_back({content_lines[next++], received[pos]});
  }
  return out;
}

std::vector<double> aggregate_lines(const TokenRelevanceRecord& record, std::size_t line_count) {
  std::vector<double> lines(line_count, 0.0);
  for (const TokenScore& s : record.scores) {
    if (s.line >= line_count) {
      throw ValidationError("relevance record '" + record.function_id + "': token on line " +
                            std::to_string(s.line) + " but the function has " +
                            std::to_string(line_count) + " lines");
    }
    lines[s.line] += s.score;
  }
  return lines;
}

std::vector<double> rescale(std::span<const double> raw) {
  std::vector<double> out(raw.size(), 0.0);
  if (raw.empty()) return out;
  for (double v : raw) {
    if (!std::isfinite(v)) throw ValidationError("rescale: non-finite line relevance");
  }
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double min = *lo;
  const double range = *hi - *lo;
  if (range == 0.0) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = std::clamp((raw[i] - min) / range, 0.0, 1.0);
  }
  return out;
}

TokenRelevanceRecord absolute_variant(const TokenRelevanceRecord& record) {
  TokenRelevanceRecord out = record;
  for (TokenScore& s : out.scores) s.score = std::abs(s.score);
  out.method += method::kAbsoluteSuffix;
  return out;
}

LineRelevanceVector line_relevance(const TokenRelevanceRecord& record, std::size_t line_count) {
  const std::vector<double> raw = aggregate_lines(record, line_count);
  return {record.function_id, rescale(raw), record.method};
}

}  // namespace dalign::rel
