#pragma once

// Byte-level BPE with line provenance. Merges never involve the newline byte,
// so every token lies inside exactly one source line and the newline itself
// is a standalone token belonging to the line it terminates.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dalign::tok {

using TokenId = std::uint32_t;

inline constexpr std::size_t kBaseSize = 256;
inline constexpr std::size_t kSpecialCount = 3;
inline constexpr std::size_t kDefaultVocabSize = 8192;
inline constexpr std::size_t kDefaultBudget = 510;

struct SpecialIds {
  TokenId bos = 0;
  TokenId eos = 0;
  TokenId pad = 0;
};

struct MergeRule {
  TokenId left = 0;
  TokenId right = 0;
  friend bool operator==(const MergeRule&, const MergeRule&) = default;
};

// Immutable after construction. Content ids are [0, content_size()): the 256
// raw bytes followed by one id per merge rule in rule order. The three special
// ids follow the content ids.
class Vocabulary {
 public:
  // Byte-only vocabulary (no merges).
  Vocabulary();

  // Validates every rule: operands must already exist, the merged byte string
  // must be new and must not contain '\n'.
  explicit Vocabulary(std::vector<MergeRule> merges);

  std::size_t size() const { return content_size() + kSpecialCount; }
  std::size_t content_size() const { return expansions_.size(); }
  const std::vector<MergeRule>& merges() const { return merges_; }
  const SpecialIds& specials() const { return specials_; }

  bool is_special(TokenId id) const {
    return id == specials_.bos || id == specials_.eos || id == specials_.pad;
  }
  bool is_valid(TokenId id) const { return id < size(); }

  // Byte expansion of a content id.
  std::string_view expansion(TokenId id) const { return expansions_.at(id); }

  // Rule index of the merge (left, right), if any.
  std::optional<std::size_t> rank(TokenId left, TokenId right) const;

  // {"base_size":256,"specials":{...},"merges":[[[bytes..],[bytes..]],...]}
  std::string to_json() const;
  static Vocabulary from_json(std::string_view text);

  // Hash of the canonical JSON form.
  std::uint64_t fingerprint() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.merges_ == b.merges_;
  }

 private:
  std::vector<MergeRule> merges_;
  std::vector<std::string> expansions_;
  std::unordered_map<std::uint64_t, std::size_t> ranks_;
  SpecialIds specials_;
};

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

struct Token {
  TokenId id = 0;
  ByteSpan byte_span;
  std::size_t line_index = 0;
  friend bool operator==(const Token&, const Token&) = default;
};

struct TokenizedFunction {
  std::string function_id;
  std::vector<Token> tokens;
  std::size_t line_count = 0;
  bool truncated = false;
  std::size_t max_content_tokens = kDefaultBudget;

  std::vector<TokenId> ids() const;
  std::vector<std::size_t> token_lines() const;
};

// Learns merges greedily by pair frequency. Pairs are counted within lines
// only. Equal counts are broken by the lexicographically smallest merged byte
// string, then by the smaller left operand expansion. Training stops early if
// no mergeable pair remains. Throws ValidationError on an empty corpus or a
// target below 256 + 3.
Vocabulary train_bpe(std::span<const std::string> corpus,
                     std::size_t target_vocab_size = kDefaultVocabSize);

// Applies the merges in rule order inside each line and keeps the first
// `budget` tokens. line_count always describes the untruncated code.
TokenizedFunction encode(const Vocabulary& vocab, std::string_view code,
                         std::size_t budget = kDefaultBudget,
                         std::string function_id = {});

// Concatenates byte expansions, skipping special ids. Throws ValidationError
// on an id outside the vocabulary.
std::string decode(const Vocabulary& vocab, std::span<const TokenId> ids);

}  // namespace dalign::tok
