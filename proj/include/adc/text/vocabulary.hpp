#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "adc/error.hpp"
#include "adc/nn/types.hpp"

namespace adc {

/// Lowercases, turns . , ; : ! ? " ( ) into spaces and splits on whitespace.
inline std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : sentence) {
    const auto uc = static_cast<unsigned char>(ch);
    const bool punct = std::string_view(".,;:!?\"()").find(ch) != std::string_view::npos;
    if (punct || std::isspace(uc)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(uc)));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kStart = 1;
  static constexpr TokenId kEnd = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kNumSpecials = 4;

  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

  /// `words` are the non-special entries in id order starting at 4.
  explicit Vocabulary(const std::vector<std::string>& words) {
    for (const char* s : {"<pad>", "<start>", "<end>", "<unk>"}) push(s);
    for (const auto& w : words) {
      if (index_.count(w)) throw ValidationError("duplicate vocabulary word '" + w + "'");
      push(w);
    }
  }

  /// Specials take ids 0..3; other words with count >= min_count follow,
  /// ordered by descending count and then lexicographically.
  static Vocabulary build(const std::vector<std::vector<std::string>>& corpus, int min_count = 1) {
    if (min_count < 1) throw ValidationError("build_vocab: min_count must be >= 1");
    std::map<std::string, long> counts;
    for (const auto& sentence : corpus)
      for (const auto& w : sentence) ++counts[w];
    std::vector<std::pair<std::string, long>> kept;
    for (const auto& [w, c] : counts)
      if (c >= min_count && !is_special_word(w)) kept.emplace_back(w, c);
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> words;
    words.reserve(kept.size());
    for (auto& [w, c] : kept) words.push_back(w);
    return Vocabulary(words);
  }

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= words_.size())
      throw ValidationError("token id " + std::to_string(id) + " outside vocabulary");
    return words_[static_cast<std::size_t>(id)];
  }

  TokenId id(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& word) const { return index_.count(word) != 0; }

  Tokens encode(const std::vector<std::string>& words) const {
    Tokens ids;
    ids.reserve(words.size());
    for (const auto& w : words) ids.push_back(id(w));
    return ids;
  }

  std::vector<std::string> decode(const Tokens& ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (TokenId t : ids) out.push_back(word(t));
    return out;
  }

  /// Space-joined surface text with specials removed.
  std::string to_text(const Tokens& ids) const {
    std::string out;
    for (TokenId t : ids) {
      if (t < static_cast<TokenId>(kNumSpecials) && t != kUnk) continue;
      if (!out.empty()) out.push_back(' ');
      out += word(t);
    }
    return out;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  static bool is_special_word(const std::string& w) {
    return w == "<pad>" || w == "<start>" || w == "<end>" || w == "<unk>";
  }

  void push(const std::string& w) {
    index_.emplace(w, static_cast<TokenId>(words_.size()));
    words_.push_back(w);
  }

  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Drops a trailing end token, if any.
inline Tokens strip_end(const Tokens& ids) {
  Tokens out = ids;
  if (!out.empty() && out.back() == Vocabulary::kEnd) out.pop_back();
  return out;
}

}  // namespace adc
