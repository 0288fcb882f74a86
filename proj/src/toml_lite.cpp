// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include "symscreen/toml_lite.hpp"

#include <cctype>

#include "symscreen/error.hpp"

namespace symscreen::toml {

const std::string& Value::as_string() const {
  if (!is_string()) throw ValidationError("expected a string value");
  return std::get<std::string>(data);
}

std::int64_t Value::as_int() const {
  if (!is_int()) throw ValidationError("expected an integer value");
  return std::get<std::int64_t>(data);
}

bool Value::as_bool() const {
  if (!std::holds_alternative<bool>(data)) throw ValidationError("expected a boolean value");
  return std::get<bool>(data);
}

const Array& Value::as_array() const {
  if (!is_array()) throw ValidationError("expected an array value");
  return std::get<Array>(data);
}

const Value* Table::find(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

const Value& Table::at(std::string_view key) const {
  if (const Value* v = find(key)) return *v;
  throw ValidationError("missing key '" + std::string(key) + "'");
}

void Table::set(std::string key, Value v) {
  for (auto& [k, existing] : entries) {
    if (k == key) {
      existing = std::move(v);
      return;
    }
  }
  entries.emplace_back(std::move(key), std::move(v));
}

const Table* Document::table(std::string_view name) const {
  for (const auto& s : sections) {
    if (!s.is_array_item && s.name == name) return &s.table;
  }
  return nullptr;
}

std::vector<const Table*> Document::array(std::string_view name) const {
  std::vector<const Table*> out;
  for (const auto& s : sections) {
    if (s.is_array_item && s.name == name) out.push_back(&s.table);
  }
  return out;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Document run() {
    Document doc;
    Table* current = nullptr;
    Table root;
    while (pos_ < src_.size()) {
      skip_blank_and_comments();
      if (pos_ >= src_.size()) break;
      if (peek() == '[') {
        const bool array_item = src_.substr(pos_, 2) == "[[";
        pos_ += array_item ? 2 : 1;
        std::string name = bare_key();
        expect(']');
        if (array_item) expect(']');
        end_of_line();
        doc.sections.push_back({std::move(name), array_item, {}});
        current = &doc.sections.back().table;
        continue;
      }
      std::string key = bare_key();
      skip_inline_space();
      expect('=');
      skip_inline_space();
      Value v = value();
      end_of_line();
      Table& target = current ? *current : root;
      if (target.find(key)) fail("duplicate key '" + key + "'");
      target.entries.emplace_back(std::move(key), std::move(v));
    }
    if (!root.entries.empty()) {
      doc.sections.insert(doc.sections.begin(), Section{"", false, std::move(root)});
    }
    return doc;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("toml line " + std::to_string(line_) + ": " + what);
  }

  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_inline_space() {
    while (peek() == ' ' || peek() == '\t') ++pos_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
    }
  }

  // Whitespace, newlines and comments; used between statements and inside arrays.
  void skip_blank_and_comments() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        skip_comment();
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_inline_space();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (pos_ < src_.size()) {
      if (peek() != '\n') fail("unexpected trailing characters");
      ++pos_;
      ++line_;
    }
  }

  std::string bare_key() {
    skip_inline_space();
    const std::size_t start = pos_;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ == start) fail("expected a key");
    return std::string(src_.substr(start, pos_ - start));
  }

  Value value() {
    const char c = peek();
    if (c == '"') return Value{basic_string()};
    if (c == '\'') return Value{literal_string()};
    if (c == '[') return Value{array()};
    if (src_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return Value{true};
    }
    if (src_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return Value{false};
    }
    if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) return Value{integer()};
    fail("unsupported value");
  }

  std::int64_t integer() {
    bool negative = false;
    if (peek() == '-' || peek() == '+') {
      negative = peek() == '-';
      ++pos_;
    }
    if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected digits");
    std::int64_t v = 0;
    while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '_') {
      if (peek() != '_') v = v * 10 + (peek() - '0');
      ++pos_;
    }
    return negative ? -v : v;
  }

  Array array() {
    expect('[');
    Array out;
    for (;;) {
      skip_blank_and_comments();
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      out.push_back(value());
      skip_blank_and_comments();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  std::string literal_string() {
    expect('\'');
    const std::size_t start = pos_;
    while (pos_ < src_.size() && src_[pos_] != '\'' && src_[pos_] != '\n') ++pos_;
    if (peek() != '\'') fail("unterminated literal string");
    std::string out(src_.substr(start, pos_ - start));
    ++pos_;
    return out;
  }

  std::string basic_string() {
    expect('"');
    std::string out;
    while (pos_ < src_.size()) {
      const char c = src_[pos_++];
      if (c == '"') return out;
      if (c == '\n') break;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      const char esc = peek();
      ++pos_;
      switch (esc) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'u': append_codepoint(out, hex(4)); break;
        case 'U': append_codepoint(out, hex(8)); break;
        default: fail("unsupported escape");
      }
    }
    fail("unterminated string");
  }

  std::uint32_t hex(int digits) {
    std::uint32_t v = 0;
    for (int i = 0; i < digits; ++i) {
      const char c = peek();
      ++pos_;
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<std::uint32_t>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint32_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint32_t>(c - 'A' + 10);
      else fail("bad unicode escape");
    }
    return v;
  }

  static void append_codepoint(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

void write_value(std::string& out, const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v.data)) {
    out.push_back('"');
    for (char c : *s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: out.push_back(c);
      }
    }
    out.push_back('"');
  } else if (const auto* i = std::get_if<std::int64_t>(&v.data)) {
    out += std::to_string(*i);
  } else if (const auto* b = std::get_if<bool>(&v.data)) {
    out += *b ? "true" : "false";
  } else {
    const auto& arr = std::get<Array>(v.data);
    out.push_back('[');
    for (std::size_t k = 0; k < arr.size(); ++k) {
      if (k) out += ", ";
      write_value(out, arr[k]);
    }
    out.push_back(']');
  }
}

}  // namespace

Document parse(std::string_view source) { return Parser(source).run(); }

std::string serialize(const Document& doc) {
  std::string out;
  for (const auto& section : doc.sections) {
    if (!out.empty()) out.push_back('\n');
    if (!section.name.empty()) {
      out += section.is_array_item ? "[[" + section.name + "]]\n" : "[" + section.name + "]\n";
    }
    for (const auto& [k, v] : section.table.entries) {
      out += k;
      out += " = ";
      write_value(out, v);
      out.push_back('\n');
    }
  }
  return out;
}

Value string_array(const std::vector<std::string>& items) {
  Array arr;
  arr.reserve(items.size());
  for (const auto& s : items) arr.push_back(Value{s});
  return Value{std::move(arr)};
}

std::vector<std::string> to_strings(const Value& v) {
  std::vector<std::string> out;
  for (const auto& item : v.as_array()) out.push_back(item.as_string());
  return out;
}

}  // namespace symscreen::toml
