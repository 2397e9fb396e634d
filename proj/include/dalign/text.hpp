#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dalign {

// Line convention shared by the tokenizer and the ground-truth extractor:
// lines are newline-terminated, a trailing newline does not open a new line,
// and an empty text has zero lines. "a\nb" and "a\nb\n" both have two lines.
std::size_t count_lines(std::string_view text);

// Splits into lines without their terminating '\n'. Size equals count_lines.
std::vector<std::string_view> split_lines(std::string_view text);

std::string_view trim_trailing_whitespace(std::string_view line);

// 64-bit FNV-1a, used to bind checkpoints to the vocabulary they were trained on.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace dalign
