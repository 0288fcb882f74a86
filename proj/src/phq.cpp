// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include "symscreen/phq.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>

namespace symscreen {

std::string to_string(PhqKind k) {
  switch (k) {
    case PhqKind::phq2: return "PHQ2";
    case PhqKind::phq9: return "PHQ9";
    case PhqKind::partial: return "partial";
  }
  return "partial";
}

namespace {

constexpr std::string_view kItemsMarker = "Items Answered:";
constexpr std::size_t kScoreWindow = 16;

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Parses "<ws>*<1-2 digits>" starting at pos, bounded by the score window.
std::optional<int> parse_score(std::string_view text, std::size_t pos) {
  const std::size_t limit = std::min(text.size(), pos + kScoreWindow);
  std::size_t i = pos;
  while (i < limit && (text[i] == ' ' || text[i] == '\t')) ++i;
  std::size_t digits = 0;
  int v = 0;
  while (i < limit && is_digit(text[i]) && digits < 3) {
    v = v * 10 + (text[i] - '0');
    ++i;
    ++digits;
  }
  if (digits == 0 || digits > 2) return std::nullopt;
  if (i < text.size() && is_digit(text[i])) return std::nullopt;
  if (v > 27) return std::nullopt;
  return v;
}

// "Items Answered: k" between `from` and the end of the following line,
// not crossing the next score marker.
std::optional<int> parse_items(std::string_view text, std::size_t from, std::size_t next_marker) {
  std::size_t end = text.find('\n', from);
  if (end != std::string_view::npos) end = text.find('\n', end + 1);
  if (end == std::string_view::npos) end = text.size();
  end = std::min(end, next_marker);
  const std::string_view region = text.substr(from, end - from);
  const std::size_t at = region.find(kItemsMarker);
  if (at == std::string_view::npos) return std::nullopt;
  std::size_t i = at + kItemsMarker.size();
  while (i < region.size() && (region[i] == ' ' || region[i] == '\t')) ++i;
  if (i >= region.size() || !is_digit(region[i])) return std::nullopt;
  const int k = region[i] - '0';
  if (i + 1 < region.size() && is_digit(region[i + 1])) return std::nullopt;
  return k;
}

}  // namespace

std::vector<PhqInstance> parse_phq(std::string_view note_text, bool assume_full) {
  std::vector<std::size_t> markers;
  for (std::size_t at = note_text.find(kPhqMarker); at != std::string_view::npos;
       at = note_text.find(kPhqMarker, at + kPhqMarker.size())) {
    markers.push_back(at);
  }

  std::vector<PhqInstance> out;
  for (std::size_t m = 0; m < markers.size(); ++m) {
    const std::size_t after = markers[m] + kPhqMarker.size();
    const std::size_t next = m + 1 < markers.size() ? markers[m + 1] : note_text.size();
    PhqInstance inst;
    inst.total_score = parse_score(note_text, after);
    if (!inst.total_score) {
      inst.malformed = true;
      out.push_back(inst);
      continue;
    }
    if (const auto items = parse_items(note_text, after, next)) {
      inst.items_answered = *items;
      inst.kind = *items == 9 ? PhqKind::phq9 : (*items >= 2 ? PhqKind::phq2 : PhqKind::partial);
    } else if (assume_full) {
      inst.items_answered = 9;
      inst.kind = PhqKind::phq9;
    }
    out.push_back(inst);
  }
  return out;
}

std::vector<PhqInstance> phq_instances(const Corpus& corpus, bool assume_full) {
  std::vector<PhqInstance> out;
  for (const Note& n : corpus.notes()) {
    for (PhqInstance inst : parse_phq(n.text, assume_full)) {
      inst.note_id = n.note_id;
      out.push_back(std::move(inst));
    }
  }
  return out;
}

CohortStats cohort_stats(const Corpus& corpus, PhqDenominator denominator, bool assume_full) {
  struct PatientTally {
    bool recorded = false;
    int any = 0;
    int phq9 = 0;
    int phq2 = 0;
    int visits = 0;
  };
  struct Bin {
    int patients = 0;
    int visits = 0;
    int with_phq = 0;
    int one_any = 0, one_9 = 0, one_2 = 0, two_any = 0, two_9 = 0, two_2 = 0;
  };
  std::map<int, Bin> bins;

  for (const Patient& p : corpus.patients()) {
    const auto idx = corpus.notes_of(p.patient_id);
    if (idx.empty()) continue;
    Date last = corpus.notes()[idx.front()].date;
    PatientTally t;
    for (std::size_t i : idx) {
      const Note& n = corpus.notes()[i];
      last = std::max(last, n.date);
      const auto found = parse_phq(n.text, assume_full);
      if (found.empty()) continue;
      t.recorded = true;
      ++t.visits;
      for (const auto& inst : found) {
        if (inst.malformed) continue;
        ++t.any;
        if (inst.kind == PhqKind::phq9) ++t.phq9;
        if (inst.kind == PhqKind::phq2) ++t.phq2;
      }
    }
    Bin& b = bins[age_in_years(p.birth_date, last)];
    ++b.patients;
    b.visits += t.visits;
    if (t.recorded) ++b.with_phq;
    b.one_any += t.any >= 1;
    b.one_9 += t.phq9 >= 1;
    b.one_2 += t.phq2 >= 1;
    b.two_any += t.any >= 2;
    b.two_9 += t.phq9 >= 2;
    b.two_2 += t.phq2 >= 2;
  }

  CohortStats stats;
  for (const auto& [age, b] : bins) {
    const int denom = denominator == PhqDenominator::cohort ? b.patients : b.with_phq;
    auto pct = [denom](int n) { return denom == 0 ? 0.0 : 100.0 * n / denom; };
    CohortStatsRow r;
    r.age_bin = age;
    r.n_patients = b.patients;
    r.n_visits_with_phq = b.visits;
    r.n_patients_with_phq = b.with_phq;
    r.pct_at_least_one_phq = pct(b.one_any);
    r.pct_at_least_one_phq9 = pct(b.one_9);
    r.pct_at_least_one_phq2 = pct(b.one_2);
    r.pct_at_least_two_phq = pct(b.two_any);
    r.pct_at_least_two_phq9 = pct(b.two_9);
    r.pct_at_least_two_phq2 = pct(b.two_2);
    stats.rows.push_back(r);
  }
  if (!stats.rows.empty()) {
    CohortStatsRow avg;
    avg.age_bin = -1;
    const double n = static_cast<double>(stats.rows.size());
    for (const auto& r : stats.rows) {
      avg.n_patients += r.n_patients / n;
      avg.n_visits_with_phq += r.n_visits_with_phq / n;
      avg.n_patients_with_phq += r.n_patients_with_phq / n;
      avg.pct_at_least_one_phq += r.pct_at_least_one_phq / n;
      avg.pct_at_least_one_phq9 += r.pct_at_least_one_phq9 / n;
      avg.pct_at_least_one_phq2 += r.pct_at_least_one_phq2 / n;
      avg.pct_at_least_two_phq += r.pct_at_least_two_phq / n;
      avg.pct_at_least_two_phq9 += r.pct_at_least_two_phq9 / n;
      avg.pct_at_least_two_phq2 += r.pct_at_least_two_phq2 / n;
    }
    stats.average = avg;
  }
  return stats;
}

std::string render_cohort_stats(const CohortStats& stats) {
  std::string out =
      "Age     Patients  Visits/PHQ  Pat/PHQ  >=1 PHQ  >=1 PHQ9  >=1 PHQ2  >=2 PHQ  >=2 PHQ9  >=2 PHQ2\n";
  char buf[256];
  auto line = [&](const std::string& label, const CohortStatsRow& r) {
    std::snprintf(buf, sizeof buf, "%-7s %8.0f %11.0f %8.0f %7.0f%% %8.0f%% %8.0f%% %7.0f%% %8.0f%% %8.0f%%\n",
                  label.c_str(), r.n_patients, r.n_visits_with_phq, r.n_patients_with_phq, r.pct_at_least_one_phq,
                  r.pct_at_least_one_phq9, r.pct_at_least_one_phq2, r.pct_at_least_two_phq, r.pct_at_least_two_phq9,
                  r.pct_at_least_two_phq2);
    out += buf;
  };
  for (const auto& r : stats.rows) line(std::to_string(r.age_bin), r);
  if (stats.average) line("Average", *stats.average);
  return out;
}

Corpus filter_phq_window(const Corpus& corpus, int window_days, bool assume_full) {
  std::map<std::string, std::vector<Date>> phq_dates;
  for (const Note& n : corpus.notes()) {
    const auto found = parse_phq(n.text, assume_full);
    if (!found.empty()) phq_dates[n.patient_id].push_back(n.date);
  }
  std::vector<Note> kept;
  std::set<std::string> kept_ids;
  for (const Note& n : corpus.notes()) {
    const auto it = phq_dates.find(n.patient_id);
    if (it == phq_dates.end()) continue;
    const bool near = std::any_of(it->second.begin(), it->second.end(), [&](const Date& d) {
      const long gap = days_between(n.date, d);
      return gap <= window_days && gap >= -window_days;
    });
    if (near) {
      kept.push_back(n);
      kept_ids.insert(n.note_id);
    }
  }
  std::vector<GoldLabel> gold;
  for (const auto& g : corpus.gold()) {
    if (kept_ids.contains(g.note_id)) gold.push_back(g);
  }
  return Corpus(corpus.patients(), std::move(kept), std::move(gold));
}

}  // namespace symscreen
