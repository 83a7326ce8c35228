#pragma once

#include <nlohmann/json.hpp>

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ptlab::tokenizer {

struct TokenId {
  std::uint32_t index = 0;
  auto operator<=>(const TokenId&) const = default;
};

enum class TokenKind { word, character, nouveau };

std::string_view to_string(TokenKind kind);
TokenKind token_kind_from_string(std::string_view name);

/// Encoded prompt. `word_of[i]` is the index of the first whitespace word
/// that token i was produced from; fused phrase tokens span two words.
struct TokenSeq {
  std::vector<TokenId> ids;
  std::vector<std::string> spans;
  std::vector<std::uint32_t> word_of;

  std::size_t size() const noexcept { return ids.size(); }
  bool empty() const noexcept { return ids.empty(); }
  /// Rebuilds the normalized text from the spans.
  std::string text() const;
};

struct VocabEntry {
  std::string surface;
  TokenKind kind = TokenKind::word;
  bool operator==(const VocabEntry&) const = default;
};

class TokenizerError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The pre-defined token inventory plus tokens registered after release.
///
/// Layout: index 0 is the reserved pad token, then one character token per
/// printable ASCII character, then the word inventory. Everything below
/// base_size() is the released dictionary; indices at or above it are
/// nouveau tokens.
class Vocabulary {
 public:
  static constexpr std::size_t kMaxPromptTokens = 16;
  static constexpr std::string_view kPadSurface = "<pad>";

  /// The released dictionary with the built-in word inventory.
  static Vocabulary base();
  static Vocabulary from_entries(std::vector<VocabEntry> entries, std::size_t base_size);
  static const std::vector<std::string>& default_words();

  TokenSeq encode(std::string_view text) const;
  std::string decode(std::span<const TokenId> ids) const;

  /// Adds a single whitespace-free surface as a nouveau token.
  TokenId register_nouveau(std::string_view surface);
  /// Adds a two-word phrase as one fused nouveau token; encode() matches
  /// word pairs before single words.
  TokenId register_nouveau_phrase(std::string_view phrase);

  std::optional<TokenId> find(std::string_view surface) const;
  /// True when `word` (lowercased) is a whole entry of the released dictionary.
  bool is_base_word(std::string_view word) const;

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t base_size() const noexcept { return base_size_; }
  TokenId pad() const noexcept { return TokenId{0}; }
  const VocabEntry& entry(TokenId id) const;
  const std::vector<VocabEntry>& entries() const noexcept { return entries_; }
  std::vector<TokenId> nouveau_tokens() const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  bool operator==(const Vocabulary& other) const {
    return base_size_ == other.base_size_ && entries_ == other.entries_;
  }

 private:
  TokenId append(std::string surface, TokenKind kind);
  void validate() const;

  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t base_size_ = 0;
};

/// Lowercases and splits on ASCII whitespace. Throws TokenizerError on
/// characters outside printable ASCII.
std::vector<std::string> normalize_words(std::string_view text);

/// Identifier taxonomy over Old (in the released dictionary) / New words.
enum class IdentifierClass { single_new, single_old, new_new, new_old, old_new, old_old };

std::string_view to_string(IdentifierClass c);
IdentifierClass classify_identifier(const Vocabulary& vocab, std::string_view identifier);

}  // namespace ptlab::tokenizer
