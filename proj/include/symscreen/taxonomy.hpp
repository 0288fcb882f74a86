// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace symscreen {

enum class PhqQuestion { Q1 = 1, Q2, Q3, Q4, Q5, Q6, Q7, Q8, Q9 };

/// Direction of change relative to the patient's norm. Metadata only.
enum class Direction { increase, decrease, both, not_applicable };

std::string to_string(PhqQuestion q);
std::string to_string(Direction d);
PhqQuestion parse_phq_question(std::string_view s);
Direction parse_direction(std::string_view s);

/// A note must contain every word of one set to match.
using KeywordSet = std::vector<std::string>;

struct SymptomCategory {
  std::string id;
  std::string display_name;
  PhqQuestion phq_question = PhqQuestion::Q1;
  Direction direction = Direction::not_applicable;
  std::vector<int> bdi_items;
  std::string chat_query;  ///< single interrogative sentence
  std::string hypothesis;  ///< single declarative sentence for entailment prompts
  std::vector<KeywordSet> keywords;
  std::string shot_note;   ///< positive in-context exemplar note
  std::string shot_quote;  ///< evidence the exemplar answer quotes

  friend bool operator==(const SymptomCategory&, const SymptomCategory&) = default;
};

/// One in-context exemplar: a note and the expected answer (no quote means "No.").
struct Shot {
  std::string note;
  std::optional<std::string> quote;
  friend bool operator==(const Shot&, const Shot&) = default;
};

/// The ordered set of symptom categories plus the shared negative exemplars.
/// Immutable once constructed.
class Taxonomy {
 public:
  static constexpr std::size_t kCategoryCount = 16;

  Taxonomy(std::vector<SymptomCategory> categories, std::string negative_first, std::string negative_last);

  /// Built-in taxonomy compiled from data/taxonomy.toml.
  static const Taxonomy& canonical();
  static Taxonomy from_toml(std::string_view source);
  static Taxonomy load(const std::string& path);
  [[nodiscard]] std::string to_toml() const;

  [[nodiscard]] const std::vector<SymptomCategory>& categories() const { return categories_; }
  [[nodiscard]] std::size_t size() const { return categories_.size(); }
  [[nodiscard]] const SymptomCategory& operator[](std::size_t i) const { return categories_[i]; }

  [[nodiscard]] const SymptomCategory* find(std::string_view id) const;
  /// Throws ValidationError for unknown ids.
  [[nodiscard]] const SymptomCategory& at(std::string_view id) const;
  [[nodiscard]] std::optional<std::size_t> index_of(std::string_view id) const;
  [[nodiscard]] const std::vector<KeywordSet>& keywords_for(std::string_view id) const;

  /// The three canonical chat exemplars for a category: negative, positive, negative.
  [[nodiscard]] std::vector<Shot> shots_for(const SymptomCategory& category) const;

  friend bool operator==(const Taxonomy&, const Taxonomy&) = default;

 private:
  std::vector<SymptomCategory> categories_;
  std::string negative_first_;
  std::string negative_last_;
};

/// Ordered categories of the canonical taxonomy.
const std::vector<SymptomCategory>& taxonomy();
const std::vector<KeywordSet>& keywords_for(std::string_view category_id);

}  // namespace symscreen
