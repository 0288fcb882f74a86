// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "symscreen/corpus.hpp"

namespace symscreen {

struct MatchingRules {
  int max_birth_gap_days = 30;
  int window_months = 18;  ///< control needs a visit in (dx - window, dx]
};

struct MatchResult {
  std::vector<std::pair<std::string, std::string>> pairs;  ///< (case_id, control_id)
  std::vector<std::string> unmatched;                      ///< case ids
};

using VisitIndex = std::map<std::string, std::vector<Date>, std::less<>>;

VisitIndex visit_dates(const Corpus& corpus);

/// Greedy 1:1 case-control matching.
///
/// Cases are processed by ascending diagnosis date (then patient_id). Each
/// takes the unused eligible control with the smallest birth-date gap, ties
/// broken by patient_id. Eligible means: same gender, birth dates at most
/// `max_birth_gap_days` apart, no diagnosis on or before the case's diagnosis
/// date, and at least one visit within the window ending at that date.
MatchResult match_controls(std::span<const Patient> cases, std::span<const Patient> pool, const VisitIndex& visits,
                           const MatchingRules& rules = {});

/// Convenience overload: cases and pool drawn from the corpus by is_case.
MatchResult match_controls(const Corpus& corpus, const MatchingRules& rules = {});

}  // namespace symscreen
