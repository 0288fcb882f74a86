// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include "symscreen/text.hpp"

#include <cctype>

namespace symscreen::text {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
bool is_continuation(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

}  // namespace

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = lower(c);
  return out;
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (char c : s) {
    if (!is_continuation(c)) ++n;
  }
  return n;
}

std::size_t utf8_offset(std::string_view s, std::size_t n) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!is_continuation(s[i])) {
      if (seen == n) return i;
      ++seen;
    }
  }
  return s.size();
}

std::vector<Token> word_tokens(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_alnum(s[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < s.size() && is_alnum(s[i])) ++i;
    out.push_back({to_lower_ascii(s.substr(start, i - start)), {start, i}});
  }
  return out;
}

std::vector<ByteRange> sentences(std::string_view s) {
  std::vector<ByteRange> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    const std::string_view piece = trim(s.substr(b, e - b));
    if (!piece.empty()) {
      const auto start = static_cast<std::size_t>(piece.data() - s.data());
      out.push_back({start, start + piece.size()});
    }
  };
  std::size_t begin = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\n') {
      emit(begin, i);
      begin = i + 1;
    } else if ((c == '.' || c == '!' || c == '?') && (i + 1 == s.size() || is_space(s[i + 1]))) {
      emit(begin, i + 1);
      begin = i + 1;
    }
  }
  emit(begin, s.size());
  return out;
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::optional<ByteRange> find_normalized(std::string_view haystack, std::string_view needle) {
  const std::string pattern = to_lower_ascii(normalize_whitespace(needle));
  if (pattern.empty()) return std::nullopt;

  // Normalized copy of the haystack with a map back to original byte offsets.
  std::string norm;
  std::vector<std::size_t> origin;
  bool pending_space = false;
  for (std::size_t i = 0; i < haystack.size(); ++i) {
    const char c = haystack[i];
    if (is_space(c)) {
      pending_space = !norm.empty();
      continue;
    }
    if (pending_space) {
      norm.push_back(' ');
      origin.push_back(i);
      pending_space = false;
    }
    norm.push_back(lower(c));
    origin.push_back(i);
  }
  const std::size_t pos = norm.find(pattern);
  if (pos == std::string::npos) return std::nullopt;
  const std::size_t last = pos + pattern.size() - 1;
  return ByteRange{origin[pos], origin[last] + 1};
}

}  // namespace symscreen::text
