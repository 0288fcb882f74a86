// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace symscreen::toml {

// Reader and writer for the TOML subset used by the data files: [table] and
// [[array-of-tables]] headers, key = value lines with basic or literal strings,
// integers, booleans and (nested) arrays. Inline tables, dotted keys, dates and
// multi-line strings are rejected.

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<std::string, std::int64_t, bool, Array> data;

  [[nodiscard]] bool is_string() const { return std::holds_alternative<std::string>(data); }
  [[nodiscard]] bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
  [[nodiscard]] bool is_array() const { return std::holds_alternative<Array>(data); }
  [[nodiscard]] const std::string& as_string() const;
  [[nodiscard]] std::int64_t as_int() const;
  [[nodiscard]] bool as_bool() const;
  [[nodiscard]] const Array& as_array() const;

  friend bool operator==(const Value&, const Value&) = default;
};

struct Table {
  std::vector<std::pair<std::string, Value>> entries;

  [[nodiscard]] const Value* find(std::string_view key) const;
  /// Throws ValidationError naming `key` when missing.
  [[nodiscard]] const Value& at(std::string_view key) const;
  void set(std::string key, Value v);
};

struct Section {
  std::string name;
  bool is_array_item = false;
  Table table;
};

struct Document {
  std::vector<Section> sections;

  [[nodiscard]] const Table* table(std::string_view name) const;
  [[nodiscard]] std::vector<const Table*> array(std::string_view name) const;
};

/// Throws ValidationError with a line number on malformed input.
Document parse(std::string_view source);
std::string serialize(const Document& doc);

Value string_array(const std::vector<std::string>& items);
std::vector<std::string> to_strings(const Value& v);

}  // namespace symscreen::toml
