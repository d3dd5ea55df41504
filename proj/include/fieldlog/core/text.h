#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fieldlog::text {

// ASCII case folding; bytes >= 0x80 pass through unchanged.
std::string case_fold(std::string_view s);

std::string_view trim(std::string_view s);
inline bool is_blank(std::string_view s) { return trim(s).empty(); }

// Splits on whitespace and ASCII punctuation after case folding. Non-ASCII
// bytes are word characters, so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view s);

// True when `phrase` (already tokenized) occurs as a contiguous run of `tokens`.
bool contains_phrase(std::span<const std::string> tokens, std::span<const std::string> phrase);

// Number of (possibly overlapping) occurrences of `phrase` in `tokens`, where each
// phrase token also matches its simple plural ("aphid" ~ "aphids", "leaf spot" ~
// "leaf spots").
std::size_t count_term(std::span<const std::string> tokens, std::span<const std::string> phrase);

// Routing/query keyword rule: the keyword's tokens appear contiguously in the
// transcript's tokens. No plural tolerance.
bool has_keyword(std::span<const std::string> transcript_tokens, std::string_view keyword);

}  // namespace fieldlog::text
