#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace ed2d::text {

// Token accounting is an approximation of BPE tokenizers that needs no vocabulary:
// a run of ASCII letters/digits counts as one token, and every other
// non-whitespace code point (punctuation, CJK ideographs, ...) counts as one.
// It is monotone under concatenation, which is what budgets rely on.
std::size_t count_tokens(std::string_view s);

// Longest prefix of `s` holding at most `max_tokens` tokens, trailing space trimmed.
std::string truncate_tokens(std::string_view s, std::size_t max_tokens);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Lowercase + collapse internal whitespace runs to one space + trim.
std::string normalize_phrase(std::string_view s);

// Number of Unicode code points (invalid bytes count as one each).
std::size_t code_points(std::string_view s);

bool contains(std::string_view haystack, std::string_view needle);

std::uint64_t fnv1a64(std::string_view s) noexcept;
std::string hex64(std::uint64_t v);

// Strips <tag> markup and decodes the handful of entities search APIs emit.
std::string strip_markup(std::string_view s);

// UTC timestamp, ISO-8601 with millisecond precision.
std::string utc_now_iso();

}  // namespace ed2d::text
