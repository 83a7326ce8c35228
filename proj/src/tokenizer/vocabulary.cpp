#include "ptlab/tokenizer/vocabulary.hpp"

#include <algorithm>
#include <stdexcept>

namespace ptlab::tokenizer {

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::word: return "word";
    case TokenKind::character: return "character";
    case TokenKind::nouveau: return "nouveau";
  }
  return "word";
}

TokenKind token_kind_from_string(std::string_view name) {
  if (name == "word") return TokenKind::word;
  if (name == "character") return TokenKind::character;
  if (name == "nouveau") return TokenKind::nouveau;
  throw TokenizerError("unknown token kind: " + std::string(name));
}

std::string TokenSeq::text() const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0 && word_of[i] != word_of[i - 1]) out += ' ';
    out += spans[i];
  }
  return out;
}

const std::vector<std::string>& Vocabulary::default_words() {
  // Single letters ("a") are covered by the character inventory.
  static const std::vector<std::string> words = {
      "an",       "the",      "photo",    "picture", "image",    "rendering", "drawing",
      "painting", "of",       "on",       "in",      "at",       "with",      "near",
      "by",       "and",      "road",     "beach",   "street",   "grass",     "table",
      "floor",    "field",    "snow",     "city",    "forest",   "room",      "background",
      "dog",      "car",      "can",      "fridge",  "backpack", "clock",     "bowl",
      "cat",      "bird",     "house",    "tree",    "person",   "beautiful", "nice",
      "cute",     "small",    "big",      "little",  "old",      "new",       "shiny",
      "clean",    "dirty",    "cool",     "good",    "my",       "one",       "single",
      "close",    "up",       "view",     "front",   "side",     "top",       "bright",
      "dark",     "red",      "blue",     "green",   "yellow",   "white",     "black",
      "orange",   "purple",   "pink",     "brown",   "gray",     "sitting",   "standing",
      "parked",   "placed",   "open"};
  return words;
}

std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (c < 0x21 || c > 0x7e) {
      throw TokenizerError("character outside printable ASCII (code " + std::to_string(c) + ")");
    }
    current += static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

TokenId Vocabulary::append(std::string surface, TokenKind kind) {
  const auto id = static_cast<std::uint32_t>(entries_.size());
  index_.emplace(surface, id);
  entries_.push_back(VocabEntry{std::move(surface), kind});
  return TokenId{id};
}

Vocabulary Vocabulary::base() {
  Vocabulary v;
  v.append(std::string(kPadSurface), TokenKind::word);
  for (int c = 0x20; c <= 0x7e; ++c) v.append(std::string(1, static_cast<char>(c)), TokenKind::character);
  for (const auto& w : default_words()) v.append(w, TokenKind::word);
  v.base_size_ = v.entries_.size();
  return v;
}

Vocabulary Vocabulary::from_entries(std::vector<VocabEntry> entries, std::size_t base_size) {
  Vocabulary v;
  for (auto& e : entries) {
    if (v.index_.count(e.surface)) throw TokenizerError("duplicate vocabulary surface: " + e.surface);
    v.append(std::move(e.surface), e.kind);
  }
  v.base_size_ = base_size;
  v.validate();
  return v;
}

void Vocabulary::validate() const {
  if (base_size_ > entries_.size() || entries_.empty() || entries_[0].surface != kPadSurface) {
    throw TokenizerError("vocabulary layout is invalid");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const bool nouveau = entries_[i].kind == TokenKind::nouveau;
    if ((i < base_size_) == nouveau) {
      throw TokenizerError("token " + std::to_string(i) + " violates the base/nouveau partition");
    }
  }
  for (int c = 0x21; c <= 0x7e; ++c) {
    auto it = index_.find(std::string(1, static_cast<char>(c)));
    if (it == index_.end() || it->second >= base_size_) {
      throw TokenizerError("vocabulary is missing a printable character token");
    }
  }
}

std::optional<TokenId> Vocabulary::find(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  if (it == index_.end()) return std::nullopt;
  return TokenId{it->second};
}

bool Vocabulary::is_base_word(std::string_view word) const {
  std::string lower(word);
  for (auto& c : lower) c = static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
  auto id = find(lower);
  return id && id->index != 0 && id->index < base_size_;
}

const VocabEntry& Vocabulary::entry(TokenId id) const {
  if (id.index >= entries_.size()) {
    throw std::out_of_range("token id " + std::to_string(id.index) + " outside vocabulary of size " +
                            std::to_string(entries_.size()));
  }
  return entries_[id.index];
}

std::vector<TokenId> Vocabulary::nouveau_tokens() const {
  std::vector<TokenId> out;
  for (std::size_t i = base_size_; i < entries_.size(); ++i) out.push_back(TokenId{static_cast<std::uint32_t>(i)});
  return out;
}

TokenSeq Vocabulary::encode(std::string_view text) const {
  const auto words = normalize_words(text);
  TokenSeq seq;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto word_index = static_cast<std::uint32_t>(w);
    if (w + 1 < words.size()) {
      const std::string phrase = words[w] + " " + words[w + 1];
      if (auto id = find(phrase)) {
        seq.ids.push_back(*id);
        seq.spans.push_back(phrase);
        seq.word_of.push_back(word_index);
        ++w;
        continue;
      }
    }
    auto id = find(words[w]);
    if (id && id->index != 0) {
      seq.ids.push_back(*id);
      seq.spans.push_back(words[w]);
      seq.word_of.push_back(word_index);
      continue;
    }
    for (char c : words[w]) {
      seq.ids.push_back(TokenId{index_.at(std::string(1, c))});
      seq.spans.emplace_back(1, c);
      seq.word_of.push_back(word_index);
    }
  }
  return seq;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += entry(ids[i]).surface;
  }
  return out;
}

TokenId Vocabulary::register_nouveau(std::string_view surface) {
  if (surface.empty()) throw TokenizerError("cannot register an empty surface");
  const auto words = normalize_words(surface);
  if (words.size() != 1 || words[0].size() != surface.size()) {
    throw TokenizerError("nouveau surface must be a single whitespace-free word: '" + std::string(surface) + "'");
  }
  if (find(words[0])) throw TokenizerError("surface already in vocabulary: " + words[0]);
  return append(words[0], TokenKind::nouveau);
}

TokenId Vocabulary::register_nouveau_phrase(std::string_view phrase) {
  const auto words = normalize_words(phrase);
  if (words.size() != 2) throw TokenizerError("fused nouveau phrase must have exactly two words");
  const std::string surface = words[0] + " " + words[1];
  if (find(surface)) throw TokenizerError("surface already in vocabulary: " + surface);
  return append(surface, TokenKind::nouveau);
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : entries_) {
    list.push_back({{"surface", e.surface}, {"kind", std::string(to_string(e.kind))}});
  }
  return {{"base_size", base_size_}, {"entries", list}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  std::vector<VocabEntry> entries;
  for (const auto& e : j.at("entries")) {
    entries.push_back({e.at("surface").get<std::string>(), token_kind_from_string(e.at("kind").get<std::string>())});
  }
  return from_entries(std::move(entries), j.at("base_size").get<std::size_t>());
}

std::string_view to_string(IdentifierClass c) {
  switch (c) {
    case IdentifierClass::single_new: return "SingleNew";
    case IdentifierClass::single_old: return "SingleOld";
    case IdentifierClass::new_new: return "NewNew";
    case IdentifierClass::new_old: return "NewOld";
    case IdentifierClass::old_new: return "OldNew";
    case IdentifierClass::old_old: return "OldOld";
  }
  return "SingleNew";
}

IdentifierClass classify_identifier(const Vocabulary& vocab, std::string_view identifier) {
  const auto words = normalize_words(identifier);
  if (words.empty() || words.size() > 2) {
    throw TokenizerError("identifier must have one or two words: '" + std::string(identifier) + "'");
  }
  const bool first_old = vocab.is_base_word(words[0]);
  if (words.size() == 1) return first_old ? IdentifierClass::single_old : IdentifierClass::single_new;
  const bool second_old = vocab.is_base_word(words[1]);
  if (first_old) return second_old ? IdentifierClass::old_old : IdentifierClass::old_new;
  return second_old ? IdentifierClass::new_old : IdentifierClass::new_new;
}

}  // namespace ptlab::tokenizer
