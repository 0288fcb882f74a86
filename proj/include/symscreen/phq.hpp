// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "symscreen/corpus.hpp"

namespace symscreen {

enum class PhqKind { phq2, phq9, partial };

std::string to_string(PhqKind k);

/// One occurrence of the `PHQ-9 Total Score:` marker in a note.
struct PhqInstance {
  std::string note_id;              ///< empty when parsed from bare text
  std::optional<int> total_score;   ///< 0..27; absent when malformed
  int items_answered = 0;           ///< 0..9
  PhqKind kind = PhqKind::partial;
  bool malformed = false;

  friend bool operator==(const PhqInstance&, const PhqInstance&) = default;
};

inline constexpr std::string_view kPhqMarker = "PHQ-9 Total Score:";

/// Instances in document order.
///
/// The marker is case-sensitive and must be followed by optional whitespace
/// and one or two digits (total <= 27) within 16 characters; otherwise the
/// instance is malformed. An `Items Answered: k` field on the same or the next
/// line sets the completion count (9 => PHQ9, 2..8 => PHQ2, else partial).
/// Without it, `assume_full` decides between PHQ9 and partial.
std::vector<PhqInstance> parse_phq(std::string_view note_text, bool assume_full = true);

/// Every instance in the corpus with note_id filled, in corpus note order.
std::vector<PhqInstance> phq_instances(const Corpus& corpus, bool assume_full = true);

struct CohortStatsRow {
  int age_bin = 0;
  double n_patients = 0;  // counts; fractional only in the average row
  double n_visits_with_phq = 0;
  double n_patients_with_phq = 0;
  double pct_at_least_one_phq = 0;
  double pct_at_least_one_phq9 = 0;
  double pct_at_least_one_phq2 = 0;
  double pct_at_least_two_phq = 0;
  double pct_at_least_two_phq9 = 0;
  double pct_at_least_two_phq2 = 0;
};

/// Which population the percentage columns are relative to.
enum class PhqDenominator { patients_with_phq, cohort };

struct CohortStats {
  std::vector<CohortStatsRow> rows;       ///< ascending age bin
  std::optional<CohortStatsRow> average;  ///< column means over rows; absent when empty
};

/// Per-age table of PHQ completion. Age is whole years at the patient's last
/// note; patients without notes are skipped. A patient "has recorded PHQ" when
/// any marker occurs in their notes; the PHQ/PHQ9/PHQ2 columns count only
/// well-formed instances of that kind.
CohortStats cohort_stats(const Corpus& corpus, PhqDenominator denominator = PhqDenominator::patients_with_phq,
                         bool assume_full = true);

std::string render_cohort_stats(const CohortStats& stats);

/// Notes dated within `window_days` of any PHQ instance of the same patient.
Corpus filter_phq_window(const Corpus& corpus, int window_days, bool assume_full = true);

}  // namespace symscreen
