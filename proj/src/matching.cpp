// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include "symscreen/matching.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "symscreen/error.hpp"

namespace symscreen {

VisitIndex visit_dates(const Corpus& corpus) {
  VisitIndex out;
  for (const Note& n : corpus.notes()) out[n.patient_id].push_back(n.date);
  return out;
}

namespace {

bool has_visit_in_window(const VisitIndex& visits, const std::string& id, const Date& anchor, int months) {
  const auto it = visits.find(id);
  if (it == visits.end()) return false;
  const Date from = anchor.minus_months(months);
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](const Date& d) { return d > from && d <= anchor; });
}

}  // namespace

MatchResult match_controls(std::span<const Patient> cases, std::span<const Patient> pool, const VisitIndex& visits,
                           const MatchingRules& rules) {
  std::vector<const Patient*> order;
  for (const Patient& c : cases) {
    if (!c.diagnosis_date) throw ValidationError("case '" + c.patient_id + "' has no diagnosis_date");
    order.push_back(&c);
  }
  std::sort(order.begin(), order.end(), [](const Patient* a, const Patient* b) {
    if (*a->diagnosis_date != *b->diagnosis_date) return *a->diagnosis_date < *b->diagnosis_date;
    return a->patient_id < b->patient_id;
  });

  MatchResult result;
  std::set<std::string> used;
  for (const Patient* c : order) {
    const Date dx = *c->diagnosis_date;
    const Patient* best = nullptr;
    long best_gap = 0;
    for (const Patient& k : pool) {
      if (used.contains(k.patient_id) || k.gender != c->gender) continue;
      const long gap = std::labs(days_between(k.birth_date, c->birth_date));
      if (gap > rules.max_birth_gap_days) continue;
      if (k.diagnosis_date && *k.diagnosis_date <= dx) continue;
      if (!has_visit_in_window(visits, k.patient_id, dx, rules.window_months)) continue;
      if (!best || gap < best_gap || (gap == best_gap && k.patient_id < best->patient_id)) {
        best = &k;
        best_gap = gap;
      }
    }
    if (best) {
      used.insert(best->patient_id);
      result.pairs.emplace_back(c->patient_id, best->patient_id);
    } else {
      result.unmatched.push_back(c->patient_id);
    }
  }
  return result;
}

MatchResult match_controls(const Corpus& corpus, const MatchingRules& rules) {
  std::vector<Patient> cases;
  std::vector<Patient> pool;
  for (const Patient& p : corpus.patients()) (p.is_case ? cases : pool).push_back(p);
  return match_controls(cases, pool, visit_dates(corpus), rules);
}

}  // namespace symscreen
