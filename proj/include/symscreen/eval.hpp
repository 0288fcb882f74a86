// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "symscreen/corpus.hpp"
#include "symscreen/extract.hpp"
#include "symscreen/taxonomy.hpp"

namespace symscreen {

/// A metric that is undefined (N/A) on zero division.
using Metric = std::optional<double>;

struct CategoryScore {
  std::string category_id;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  Metric precision;
  Metric recall;
  Metric f1;

  friend bool operator==(const CategoryScore&, const CategoryScore&) = default;
};

/// Positive-class metrics from raw counts: P = tp/(tp+fp), R = tp/(tp+fn),
/// F1 = 2PR/(P+R); each N/A on zero division or undefined inputs.
CategoryScore score_counts(std::string category_id, std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

/// How N/A cells enter a macro average.
enum class NaPolicy { skip, as_zero };

struct MacroAverage {
  Metric precision;
  Metric recall;
  Metric f1;
  friend bool operator==(const MacroAverage&, const MacroAverage&) = default;
};

/// Mean over rows where the metric is defined (or counting N/A as 0 with as_zero).
/// N/A when no row contributes.
MacroAverage macro_average(std::span<const CategoryScore> rows, NaPolicy policy = NaPolicy::skip);

struct EvalReport {
  std::string backend_id;
  std::vector<CategoryScore> rows;
  MacroAverage macro;
  std::size_t n_excluded_backend_errors = 0;
  std::size_t n_unparseable = 0;
  std::size_t n_unlabeled = 0;  ///< detections without a gold label, ignored

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Note-level positive-class scoring over pairs that have both a gold label and
/// a detection. backend_error detections are excluded and counted; unparseable
/// ones count as negative predictions. Rows follow taxonomy order, followed by
/// unknown categories in lexicographic order. Throws ValidationError on a
/// duplicated (note, category) pair in either input.
EvalReport score(std::span<const GoldLabel> gold, std::span<const Detection> detections,
                 const Taxonomy& taxonomy = Taxonomy::canonical(), NaPolicy policy = NaPolicy::skip);

enum class ReportFormat { table, jsonl, markdown };

ReportFormat parse_report_format(std::string_view s);

/// Metrics are shown with two decimals; undefined cells render as "N/A".
std::string render_report(const EvalReport& report, ReportFormat format,
                          const Taxonomy& taxonomy = Taxonomy::canonical());

nlohmann::ordered_json to_json(const CategoryScore& row);

}  // namespace symscreen
