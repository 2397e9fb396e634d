#include "dalign/text.hpp"

namespace dalign {

std::size_t count_lines(std::string_view text) {
  if (text.empty()) return 0;
  std::size_t lines = 0;
  for (char c : text) lines += (c == '\n');
  if (text.back() != '\n') ++lines;
  return lines;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string_view trim_trailing_whitespace(std::string_view line) {
  std::size_t end = line.size();
  while (end > 0) {
    const char c = line[end - 1];
    if (c != ' ' && c != '\t' && c != '\r' && c != '\v' && c != '\f') break;
    --end;
  }
  return line.substr(0, end);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace dalign
