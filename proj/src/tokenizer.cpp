#include "dalign/tokenizer.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

#include "json.hpp"

#include "dalign/error.hpp"
#include "dalign/text.hpp"

namespace dalign::tok {
namespace {

using json = nlohmann::json;

constexpr std::uint64_t pack(TokenId left, TokenId right) {
  return (static_cast<std::uint64_t>(left) << 32) | right;
}
constexpr TokenId unpack_left(std::uint64_t key) { return static_cast<TokenId>(key >> 32); }
constexpr TokenId unpack_right(std::uint64_t key) { return static_cast<TokenId>(key & 0xffffffffu); }

std::vector<std::string> base_expansions() {
  std::vector<std::string> out;
  out.reserve(kBaseSize);
  for (std::size_t b = 0; b < kBaseSize; ++b) out.emplace_back(1, static_cast<char>(b));
  return out;
}

json bytes_to_json(std::string_view bytes) {
  json arr = json::array();
  for (unsigned char c : bytes) arr.push_back(static_cast<int>(c));
  return arr;
}

std::string json_to_bytes(const json& arr) {
  if (!arr.is_array() || arr.empty()) {
    throw ValidationError("vocabulary: merge operand must be a non-empty byte array");
  }
  std::string out;
  for (const json& b : arr) {
    if (!b.is_number_integer() || b.get<int>() < 0 || b.get<int>() > 255) {
      throw ValidationError("vocabulary: byte values must be integers in [0, 255]");
    }
    out.push_back(static_cast<char>(b.get<int>()));
  }
  return out;
}

// Three-way comparison of the byte strings (a1 + a2) and (b1 + b2) without
// materializing them.
int compare_concat(std::string_view a1, std::string_view a2, std::string_view b1,
                   std::string_view b2) {
  const std::size_t na = a1.size() + a2.size();
  const std::size_t nb = b1.size() + b2.size();
  const std::size_t n = std::min(na, nb);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ca = static_cast<unsigned char>(i < a1.size() ? a1[i] : a2[i - a1.size()]);
    const auto cb = static_cast<unsigned char>(i < b1.size() ? b1[i] : b2[i - b1.size()]);
    if (ca != cb) return ca < cb ? -1 : 1;
  }
  if (na == nb) return 0;
  return na < nb ? -1 : 1;
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(std::vector<MergeRule>{}) {}

Vocabulary::Vocabulary(std::vector<MergeRule> merges)
    : merges_(std::move(merges)), expansions_(base_expansions()) {
  std::unordered_set<std::string> seen(expansions_.begin(), expansions_.end());
  expansions_.reserve(kBaseSize + merges_.size());
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const MergeRule& rule = merges_[r];
    if (rule.left >= expansions_.size() || rule.right >= expansions_.size()) {
      throw ValidationError("vocabulary: merge " + std::to_string(r) +
                            " refers to a symbol defined later");
    }
    std::string merged = expansions_[rule.left] + expansions_[rule.right];
    if (merged.find('\n') != std::string::npos) {
      throw ValidationError("vocabulary: merge " + std::to_string(r) + " crosses a newline");
    }
    if (!seen.insert(merged).second) {
      throw ValidationError("vocabulary: merge " + std::to_string(r) +
                            " duplicates an existing symbol");
    }
    if (!ranks_.emplace(pack(rule.left, rule.right), r).second) {
      throw ValidationError("vocabulary: duplicate merge rule " + std::to_string(r));
    }
    expansions_.push_back(std::move(merged));
  }
  const auto first_special = static_cast<TokenId>(expansions_.size());
  specials_ = SpecialIds{first_special, first_special + 1, first_special + 2};
}

std::optional<std::size_t> Vocabulary::rank(TokenId left, TokenId right) const {
  const auto it = ranks_.find(pack(left, right));
  if (it == ranks_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::to_json() const {
  json doc;
  doc["base_size"] = kBaseSize;
  doc["specials"] = {{"bos", specials_.bos}, {"eos", specials_.eos}, {"pad", specials_.pad}};
  json merges = json::array();
  for (const MergeRule& rule : merges_) {
    merges.push_back(json::array({bytes_to_json(expansions_[rule.left]),
                                  bytes_to_json(expansions_[rule.right])}));
  }
  doc["merges"] = std::move(merges);
  return doc.dump();
}

Vocabulary Vocabulary::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("vocabulary: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("base_size") || !doc.contains("merges") ||
      !doc.contains("specials")) {
    throw ValidationError("vocabulary: expected base_size, specials and merges");
  }
  if (doc["base_size"] != kBaseSize) {
    throw ValidationError("vocabulary: base_size must be 256");
  }
  const json& merges_doc = doc["merges"];
  if (!merges_doc.is_array()) throw ValidationError("vocabulary: merges must be an array");

  std::map<std::string, TokenId> ids;
  for (std::size_t b = 0; b < kBaseSize; ++b) {
    ids.emplace(std::string(1, static_cast<char>(b)), static_cast<TokenId>(b));
  }
  std::vector<MergeRule> merges;
  merges.reserve(merges_doc.size());
  for (const json& pair : merges_doc) {
    if (!pair.is_array() || pair.size() != 2) {
      throw ValidationError("vocabulary: each merge must be a [left, right] pair");
    }
    const std::string left = json_to_bytes(pair[0]);
    const std::string right = json_to_bytes(pair[1]);
    const auto l = ids.find(left);
    const auto r = ids.find(right);
    if (l == ids.end() || r == ids.end()) {
      throw ValidationError("vocabulary: merge operand is not a known symbol");
    }
    merges.push_back({l->second, r->second});
    ids.emplace(left + right, static_cast<TokenId>(kBaseSize + merges.size() - 1));
  }
  Vocabulary vocab(std::move(merges));

  const json& sp = doc["specials"];
  const SpecialIds& expect = vocab.specials();
  if (!sp.is_object() || sp.value("bos", -1) != static_cast<long>(expect.bos) ||
      sp.value("eos", -1) != static_cast<long>(expect.eos) ||
      sp.value("pad", -1) != static_cast<long>(expect.pad)) {
    throw ValidationError("vocabulary: special ids must directly follow the content ids");
  }
  return vocab;
}

std::uint64_t Vocabulary::fingerprint() const { return fnv1a64(to_json()); }

std::vector<TokenId> TokenizedFunction::ids() const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(t.id);
  return out;
}

std::vector<std::size_t> TokenizedFunction::token_lines() const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(t.line_index);
  return out;
}

Vocabulary train_bpe(std::span<const std::string> corpus, std::size_t target_vocab_size) {
  if (corpus.empty()) throw ValidationError("train_bpe: corpus is empty");
  if (target_vocab_size < kBaseSize + kSpecialCount) {
    throw ValidationError("train_bpe: target vocabulary size must be at least " +
                          std::to_string(kBaseSize + kSpecialCount));
  }
  const std::size_t wanted = target_vocab_size - kBaseSize - kSpecialCount;

  // Distinct line contents with multiplicities; the newline is never part of a word.
  std::map<std::string, std::int64_t> word_freq;
  for (const std::string& text : corpus) {
    for (std::string_view line : split_lines(text)) {
      if (line.size() >= 2) ++word_freq[std::string(line)];
    }
  }
  std::vector<std::vector<TokenId>> words;
  std::vector<std::int64_t> freq;
  words.reserve(word_freq.size());
  for (const auto& [text, count] : word_freq) {
    std::vector<TokenId> symbols(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) symbols[i] = static_cast<unsigned char>(text[i]);
    words.push_back(std::move(symbols));
    freq.push_back(count);
  }

  std::unordered_map<std::uint64_t, std::int64_t> pair_count;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> pair_words;
  for (std::uint32_t w = 0; w < words.size(); ++w) {
    const auto& s = words[w];
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      const std::uint64_t key = pack(s[i], s[i + 1]);
      pair_count[key] += freq[w];
      auto& where = pair_words[key];
      if (where.empty() || where.back() != w) where.push_back(w);
    }
  }

  std::vector<std::string> expansions = base_expansions();
  std::unordered_set<std::string> known(expansions.begin(), expansions.end());
  std::unordered_set<std::uint64_t> banned;
  std::vector<MergeRule> merges;
  std::vector<std::uint32_t> visited(words.size(), UINT32_MAX);

  while (merges.size() < wanted) {
    std::uint64_t best = 0;
    std::int64_t best_count = 0;
    for (const auto& [key, count] : pair_count) {
      if (count <= 0 || banned.contains(key)) continue;
      if (count < best_count) continue;
      if (count > best_count) {
        best = key;
        best_count = count;
        continue;
      }
      const std::string& l = expansions[unpack_left(key)];
      const std::string& r = expansions[unpack_right(key)];
      const std::string& bl = expansions[unpack_left(best)];
      const std::string& br = expansions[unpack_right(best)];
      const int order = compare_concat(l, r, bl, br);
      if (order < 0 || (order == 0 && l < bl)) best = key;
    }
    if (best_count == 0) break;

    const TokenId left = unpack_left(best);
    const TokenId right = unpack_right(best);
    std::string merged = expansions[left] + expansions[right];
    if (known.contains(merged)) {
      // Another operand split already produced this byte string.
      banned.insert(best);
      continue;
    }
    const auto new_id = static_cast<TokenId>(expansions.size());
    const auto stamp = static_cast<std::uint32_t>(merges.size());
    merges.push_back({left, right});
    known.insert(merged);
    expansions.push_back(std::move(merged));

    const std::vector<std::uint32_t> affected = std::move(pair_words[best]);
    pair_words.erase(best);
    for (std::uint32_t w : affected) {
      if (visited[w] == stamp) continue;
      visited[w] = stamp;
      auto& s = words[w];
      bool present = false;
      for (std::size_t i = 0; i + 1 < s.size() && !present; ++i) {
        present = s[i] == left && s[i + 1] == right;
      }
      if (!present) continue;

      for (std::size_t i = 0; i + 1 < s.size(); ++i) pair_count[pack(s[i], s[i + 1])] -= freq[w];
      std::vector<TokenId> next;
      next.reserve(s.size());
      for (std::size_t i = 0; i < s.size();) {
        if (i + 1 < s.size() && s[i] == left && s[i + 1] == right) {
          next.push_back(new_id);
          i += 2;
        } else {
          next.push_back(s[i]);
          ++i;
        }
      }
      s = std::move(next);
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const std::uint64_t key = pack(s[i], s[i + 1]);
        pair_count[key] += freq[w];
        if (s[i] == new_id || s[i + 1] == new_id) {
          auto& where = pair_words[key];
          if (where.empty() || where.back() != w) where.push_back(w);
        }
      }
    }
    std::erase_if(pair_count, [](const auto& kv) { return kv.second <= 0; });
  }
  return Vocabulary(std::move(merges));
}

namespace {

// Greedy lowest-rank-first merging; equivalent to applying every rule in order.
void merge_symbols(const Vocabulary& vocab, std::vector<TokenId>& symbols) {
  while (symbols.size() >= 2) {
    std::size_t best_rank = SIZE_MAX;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      if (auto r = vocab.rank(symbols[i], symbols[i + 1]); r && *r < best_rank) best_rank = *r;
    }
    if (best_rank == SIZE_MAX) return;
    const MergeRule rule = vocab.merges()[best_rank];
    const auto merged_id = static_cast<TokenId>(kBaseSize + best_rank);
    std::size_t out = 0;
    for (std::size_t i = 0; i < symbols.size();) {
      if (i + 1 < symbols.size() && symbols[i] == rule.left && symbols[i + 1] == rule.right) {
        symbols[out++] = merged_id;
        i += 2;
      } else {
        symbols[out++] = symbols[i++];
      }
    }
    symbols.resize(out);
  }
}

}  // namespace

TokenizedFunction encode(const Vocabulary& vocab, std::string_view code, std::size_t budget,
                         std::string function_id) {
  if (budget == 0) throw ValidationError("encode: budget must be at least 1");
  TokenizedFunction out;
  out.function_id = std::move(function_id);
  out.max_content_tokens = budget;
  out.line_count = count_lines(code);

  std::size_t line_start = 0;
  std::size_t line_index = 0;
  std::vector<TokenId> symbols;
  while (line_start < code.size() && out.tokens.size() <= budget) {
    std::size_t line_end = code.find('\n', line_start);
    const bool terminated = line_end != std::string_view::npos;
    if (!terminated) line_end = code.size();

    symbols.clear();
    for (std::size_t i = line_start; i < line_end; ++i) {
      symbols.push_back(static_cast<unsigned char>(code[i]));
    }
    merge_symbols(vocab, symbols);
    std::size_t offset = line_start;
    for (TokenId id : symbols) {
      const std::size_t len = vocab.expansion(id).size();
      out.tokens.push_back({id, {offset, offset + len}, line_index});
      offset += len;
    }
    if (terminated) {
      out.tokens.push_back({static_cast<TokenId>('\n'), {line_end, line_end + 1}, line_index});
    }
    line_start = line_end + 1;
    ++line_index;
  }
  if (out.tokens.size() > budget) {
    out.tokens.resize(budget);
    out.truncated = true;
  }
  return out;
}

std::string decode(const Vocabulary& vocab, std::span<const TokenId> ids) {
  std::string out;
  for (TokenId id : ids) {
    if (!vocab.is_valid(id)) {
      throw ValidationError("decode: unknown token id " + std::to_string(id));
    }
    if (vocab.is_special(id)) continue;
    out += vocab.expansion(id);
  }
  return out;
}

}  // namespace dalign::tok
