// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include "symscreen/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "symscreen/error.hpp"

namespace symscreen {

using Json = nlohmann::ordered_json;

CategoryScore score_counts(std::string category_id, std::size_t tp, std::size_t fp, std::size_t fn,
                           std::size_t tn) {
  CategoryScore s{std::move(category_id), tp, fp, fn, tn, std::nullopt, std::nullopt, std::nullopt};
  if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  // 2PR/(P+R) reduces to 2tp/(2tp+fp+fn); the count form avoids double rounding.
  if (s.precision && s.recall && tp > 0) {
    s.f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  }
  return s;
}

MacroAverage macro_average(std::span<const CategoryScore> rows, NaPolicy policy) {
  auto mean = [&](Metric CategoryScore::*field) -> Metric {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
      const Metric& m = r.*field;
      if (m) {
        sum += *m;
        ++n;
      } else if (policy == NaPolicy::as_zero) {
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  return {mean(&CategoryScore::precision), mean(&CategoryScore::recall), mean(&CategoryScore::f1)};
}

EvalReport score(std::span<const GoldLabel> gold, std::span<const Detection> detections, const Taxonomy& taxonomy,
                 NaPolicy policy) {
  using Key = std::pair<std::string, std::string>;
  std::map<Key, bool> truth;
  for (const auto& g : gold) {
    if (!truth.emplace(Key{g.note_id, g.category_id}, g.present).second) {
      throw ValidationError("duplicate gold label for (" + g.note_id + ", " + g.category_id + ")");
    }
  }

  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  };
  std::map<std::string, Counts> counts;
  std::set<std::string> labeled_categories;
  for (const auto& [key, present] : truth) labeled_categories.insert(key.second);

  EvalReport report;
  std::set<Key> seen;
  for (const auto& d : detections) {
    if (report.backend_id.empty()) report.backend_id = d.backend_id;
    Key key{d.note_id, d.category_id};
    if (!seen.insert(key).second) {
      throw ValidationError("duplicate detection for (" + d.note_id + ", " + d.category_id + ")");
    }
    if (d.status == DetectionStatus::backend_error) {
      ++report.n_excluded_backend_errors;
      continue;
    }
    if (d.status == DetectionStatus::unparseable) ++report.n_unparseable;
    const auto it = truth.find(key);
    if (it == truth.end()) {
      ++report.n_unlabeled;
      continue;
    }
    const bool predicted = d.present && d.status != DetectionStatus::unparseable;
    Counts& c = counts[d.category_id];
    if (it->second) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }

  std::vector<std::string> order;
  for (const auto& cat : taxonomy.categories()) {
    if (labeled_categories.contains(cat.id)) order.push_back(cat.id);
  }
  for (const auto& id : labeled_categories) {
    if (!taxonomy.find(id)) order.push_back(id);
  }
  for (const auto& id : order) {
    const Counts c = counts[id];
    report.rows.push_back(score_counts(id, c.tp, c.fp, c.fn, c.tn));
  }
  report.macro = macro_average(report.rows, policy);
  return report;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "table") return ReportFormat::table;
  if (s == "jsonl") return ReportFormat::jsonl;
  if (s == "markdown") return ReportFormat::markdown;
  throw ValidationError("invalid report format '" + std::string(s) + "'");
}

namespace {

std::string cell(const Metric& m) {
  if (!m) return "N/A";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", *m);
  return buf;
}

Json metric_json(const Metric& m) { return m ? Json(*m) : Json(nullptr); }

}  // namespace

Json to_json(const CategoryScore& row) {
  Json j;
  j["category_id"] = row.category_id;
  j["tp"] = row.tp;
  j["fp"] = row.fp;
  j["fn"] = row.fn;
  j["tn"] = row.tn;
  j["precision"] = metric_json(row.precision);
  j["recall"] = metric_json(row.recall);
  j["f1"] = metric_json(row.f1);
  return j;
}

std::string render_report(const EvalReport& report, ReportFormat format, const Taxonomy& taxonomy) {
  auto label = [&](const std::string& id) {
    const auto* c = taxonomy.find(id);
    return c ? c->display_name : id;
  };
  std::string out;
  char buf[512];
  switch (format) {
    case ReportFormat::jsonl: {
      for (const auto& r : report.rows) {
        Json j = to_json(r);
        j["backend_id"] = report.backend_id;
        out += j.dump() + "\n";
      }
      Json avg;
      avg["average"] = true;
      avg["backend_id"] = report.backend_id;
      avg["precision"] = metric_json(report.macro.precision);
      avg["recall"] = metric_json(report.macro.recall);
      avg["f1"] = metric_json(report.macro.f1);
      avg["n_excluded_backend_errors"] = report.n_excluded_backend_errors;
      avg["n_unparseable"] = report.n_unparseable;
      out += avg.dump() + "\n";
      return out;
    }
    case ReportFormat::markdown: {
      out += "| Question | Precision | Recall | F1 | TP | FP | FN | TN |\n";
      out += "|---|---|---|---|---|---|---|---|\n";
      for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof buf, "| %s | %s | %s | %s | %zu | %zu | %zu | %zu |\n", label(r.category_id).c_str(),
                      cell(r.precision).c_str(), cell(r.recall).c_str(), cell(r.f1).c_str(), r.tp, r.fp, r.fn, r.tn);
        out += buf;
      }
      std::snprintf(buf, sizeof buf, "| **Average** | %s | %s | %s | | | | |\n", cell(report.macro.precision).c_str(),
                    cell(report.macro.recall).c_str(), cell(report.macro.f1).c_str());
      out += buf;
      return out;
    }
    case ReportFormat::table: {
      std::snprintf(buf, sizeof buf, "Backend: %s\n", report.backend_id.empty() ? "-" : report.backend_id.c_str());
      out += buf;
      std::snprintf(buf, sizeof buf, "%-24s %9s %9s %9s %6s %6s %6s %6s\n", "Question", "Precision", "Recall", "F1",
                    "TP", "FP", "FN", "TN");
      out += buf;
      for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof buf, "%-24s %9s %9s %9s %6zu %6zu %6zu %6zu\n", label(r.category_id).c_str(),
                      cell(r.precision).c_str(), cell(r.recall).c_str(), cell(r.f1).c_str(), r.tp, r.fp, r.fn, r.tn);
        out += buf;
      }
      std::snprintf(buf, sizeof buf, "%-24s %9s %9s %9s\n", "Average", cell(report.macro.precision).c_str(),
                    cell(report.macro.recall).c_str(), cell(report.macro.f1).c_str());
      out += buf;
      if (report.n_excluded_backend_errors || report.n_unparseable) {
        std::snprintf(buf, sizeof buf, "Excluded backend errors: %zu; unparseable responses: %zu\n",
                      report.n_excluded_backend_errors, report.n_unparseable);
        out += buf;
      }
      return out;
    }
  }
  return out;
}

}  // namespace symscreen
