// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace symscreen::text {

/// Byte range [start, end) into a UTF-8 string.
struct ByteRange {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool is_blank(std::string_view s);

/// Number of Unicode scalar values in a UTF-8 string (continuation bytes skipped).
std::size_t utf8_length(std::string_view s);

/// Byte offset of the code point with index `n`, or s.size() when n is past the end.
std::size_t utf8_offset(std::string_view s, std::size_t n);

/// Lowercased runs of ASCII alphanumerics with their byte ranges.
struct Token {
  std::string word;
  ByteRange range;
};
std::vector<Token> word_tokens(std::string_view s);

/// Sentence ranges: split after '.', '!' or '?' followed by whitespace, and at newlines.
/// Ranges are trimmed and never empty.
std::vector<ByteRange> sentences(std::string_view s);

/// First occurrence of `needle` in `haystack`, comparing case-insensitively
/// and treating any run of whitespace as a single space. Returns the
/// matching range in `haystack`.
std::optional<ByteRange> find_normalized(std::string_view haystack, std::string_view needle);

/// Collapse whitespace runs to one space and trim.
std::string normalize_whitespace(std::string_view s);

}  // namespace symscreen::text
