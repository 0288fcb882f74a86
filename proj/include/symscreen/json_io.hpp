// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "symscreen/error.hpp"

namespace symscreen::jsonl {

using Json = nlohmann::ordered_json;

/// Calls `fn` for each non-blank line parsed as a JSON object. Parse and
/// conversion failures are rethrown as ValidationError naming the line.
template <typename Fn>
void for_each_object(std::istream& in, std::string_view source, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Json j = Json::parse(line);
      if (!j.is_object()) throw ValidationError("expected a JSON object");
      fn(j);
    } catch (const std::exception& e) {
      throw ValidationError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open '" + path + "'");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write '" + path + "'");
  return out;
}

}  // namespace symscreen::jsonl
