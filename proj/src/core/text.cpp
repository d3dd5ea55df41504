#include "fieldlog/core/text.h"

namespace fieldlog::text {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool plural_match(std::string_view word, std::string_view term) {
  if (word == term) return true;
  if (word.size() == term.size() + 1 && word.back() == 's' && word.starts_with(term)) return true;
  return word.size() == term.size() + 2 && word.ends_with("es") && word.starts_with(term);
}

}  // namespace

std::string case_fold(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool contains_phrase(std::span<const std::string> tokens, std::span<const std::string> phrase) {
  if (phrase.empty() || phrase.size() > tokens.size()) return false;
  for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
    bool all = true;
    for (std::size_t k = 0; k < phrase.size() && all; ++k) all = tokens[i + k] == phrase[k];
    if (all) return true;
  }
  return false;
}

std::size_t count_term(std::span<const std::string> tokens, std::span<const std::string> phrase) {
  if (phrase.empty() || phrase.size() > tokens.size()) return 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
    bool all = true;
    for (std::size_t k = 0; k < phrase.size() && all; ++k) all = plural_match(tokens[i + k], phrase[k]);
    if (all) ++hits;
  }
  return hits;
}

bool has_keyword(std::span<const std::string> transcript_tokens, std::string_view keyword) {
  const auto phrase = tokenize(keyword);
  return contains_phrase(transcript_tokens, phrase);
}

}  // namespace fieldlog::text
