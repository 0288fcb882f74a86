// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include "symscreen/screen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "symscreen/error.hpp"
#include "symscreen/rng.hpp"
#include "symscreen/text.hpp"

namespace symscreen {

using Json = nlohmann::ordered_json;

VectorizeResult vectorize(std::span<const Detection> detections, const Corpus& corpus, const Taxonomy& taxonomy) {
  std::map<std::pair<std::string, std::string>, bool> positive;
  for (const auto& d : detections) {
    if (!d.present || d.status == DetectionStatus::backend_error || d.status == DetectionStatus::unparseable) continue;
    positive[{d.note_id, d.category_id}] = true;
  }

  VectorizeResult out;
  for (const auto& p : corpus.patients()) {
    const auto note_rows = corpus.notes_of(p.patient_id);
    if (note_rows.empty()) {
      out.skipped.push_back(p.patient_id);
      continue;
    }
    SymptomVector v{p.patient_id, std::vector<double>(taxonomy.size(), 0.0), note_rows.size()};
    for (std::size_t c = 0; c < taxonomy.size(); ++c) {
      std::size_t hits = 0;
      for (std::size_t row : note_rows) {
        if (positive.contains({corpus.notes()[row].note_id, taxonomy[c].id})) ++hits;
      }
      v.values[c] = static_cast<double>(hits) / static_cast<double>(note_rows.size());
    }
    out.vectors.push_back(std::move(v));
  }
  return out;
}

Labels case_labels(std::span<const SymptomVector> vectors, const Corpus& corpus) {
  Labels y;
  y.reserve(vectors.size());
  for (const auto& v : vectors) {
    const Patient* p = corpus.find_patient(v.patient_id);
    if (!p) throw ValidationError("unknown patient '" + v.patient_id + "'");
    y.push_back(p->is_case ? 1 : 0);
  }
  return y;
}

Matrix feature_matrix(std::span<const SymptomVector> vectors) {
  Matrix X;
  X.reserve(vectors.size());
  for (const auto& v : vectors) X.push_back(v.values);
  return X;
}

std::vector<std::vector<std::size_t>> kfold_split(std::span<const std::string> patient_ids, std::span<const int> labels,
                                                  std::size_t k, std::uint64_t seed) {
  if (patient_ids.size() != labels.size()) throw ValidationError("patient_ids and labels differ in length");
  if (k < 2) throw ValidationError("k must be at least 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("labels must be 0 or 1");
    (labels[i] == 1 ? pos : neg).push_back(i);
  }
  if (pos.size() < k || neg.size() < k) {
    throw ValidationError("each class needs at least k=" + std::to_string(k) + " patients (cases: " +
                          std::to_string(pos.size()) + ", controls: " + std::to_string(neg.size()) + ")");
  }
  // Order by id first so the split does not depend on input order.
  auto by_id = [&](std::size_t a, std::size_t b) { return patient_ids[a] < patient_ids[b]; };
  std::sort(pos.begin(), pos.end(), by_id);
  std::sort(neg.begin(), neg.end(), by_id);
  Rng rng(seed);
  rng.shuffle(std::span(pos));
  rng.shuffle(std::span(neg));

  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (std::size_t i : pos) folds[next++ % k].push_back(i);
  for (std::size_t i : neg) folds[next++ % k].push_back(i);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

AucFraction auc_fraction(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::uint64_t n_pos = 0, n_neg = 0, twice_wins = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t group_pos = 0, group_neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1) {
        ++group_pos;
      } else if (labels[order[j]] == 0) {
        ++group_neg;
      } else {
        throw ValidationError("labels must be 0 or 1");
      }
      ++j;
    }
    twice_wins += 2 * group_pos * n_neg + group_pos * group_neg;
    n_pos += group_pos;
    n_neg += group_neg;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) throw ValidationError("auc_roc needs both classes present");
  return {twice_wins, n_pos * n_neg};
}

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  return auc_fraction(scores, labels).value();
}

namespace {

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.mean = mean;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    s.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

void summarize_folds(BenchResult& r) {
  std::vector<double> auc, f1, p, rec;
  for (const auto& f : r.folds) {
    auc.push_back(f.auc_roc);
    if (f.f1) f1.push_back(*f.f1);
    if (f.precision) p.push_back(*f.precision);
    if (f.recall) rec.push_back(*f.recall);
  }
  r.auc_roc = summarize(auc);
  r.f1 = summarize(f1);
  r.precision = summarize(p);
  r.recall = summarize(rec);
}

FoldResult evaluate_fold(const Model& model, const Matrix& X, std::span<const int> y,
                         const std::vector<std::size_t>& test) {
  FoldResult fr;
  fr.n_test = test.size();
  std::vector<double> scores;
  std::vector<int> labels;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i : test) {
    const double s = model.score(X[i]);
    scores.push_back(s);
    labels.push_back(y[i]);
    const int pred = s >= 0.5 ? 1 : 0;
    if (pred == 1 && y[i] == 1) ++tp;
    if (pred == 1 && y[i] == 0) ++fp;
    if (pred == 0 && y[i] == 1) ++fn;
  }
  fr.auc_roc = auc_roc(scores, labels);
  if (tp + fp > 0) fr.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) fr.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (fr.precision && fr.recall && *fr.precision + *fr.recall > 0.0) {
    fr.f1 = 2.0 * *fr.precision * *fr.recall / (*fr.precision + *fr.recall);
  }
  return fr;
}

BenchResult cross_validate(const ModelSpec& spec, const Matrix& X, std::span<const int> y,
                           const std::vector<std::vector<std::size_t>>& folds, std::uint64_t seed) {
  BenchResult r;
  r.kind = spec.kind;
  r.seed = seed;
  r.k = folds.size();
  for (std::size_t f = 0; f < folds.size(); ++f) {
    Matrix train_x;
    std::vector<int> train_y;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g == f) continue;
      for (std::size_t i : folds[g]) {
        train_x.push_back(X[i]);
        train_y.push_back(y[i]);
      }
    }
    ModelSpec fold_spec = spec;
    fold_spec.seed = splitmix64(seed ^ (f + 1));
    std::string warning;
    const auto model = train(fold_spec, train_x, train_y, &warning);
    if (!warning.empty()) r.warnings.push_back("fold " + std::to_string(f) + ": " + warning);
    FoldResult fr = evaluate_fold(*model, X, y, folds[f]);
    fr.fold = f;
    fr.n_train = train_x.size();
    r.folds.push_back(fr);
  }
  summarize_folds(r);
  return r;
}

}  // namespace

std::vector<BenchResult> run_bench(std::span<const ModelSpec> specs, const Matrix& X, std::span<const int> y,
                                   std::span<const std::string> patient_ids, std::size_t k, std::uint64_t seed) {
  if (X.size() != y.size()) throw ValidationError("X and y differ in length");
  const auto folds = kfold_split(patient_ids, y, k, seed);
  std::vector<BenchResult> out;
  for (const auto& spec : specs) out.push_back(cross_validate(spec, X, y, folds, seed));
  return out;
}

Matrix bag_of_words(const Corpus& corpus, std::span<const std::string> patient_ids, std::size_t bins) {
  if (bins == 0) throw ValidationError("bins must be positive");
  Matrix X;
  X.reserve(patient_ids.size());
  for (const auto& id : patient_ids) {
    std::vector<double> row(bins, 0.0);
    std::size_t total = 0;
    for (std::size_t n : corpus.notes_of(id)) {
      for (const auto& tok : text::word_tokens(corpus.notes()[n].text)) {
        row[fnv1a(tok.word) % bins] += 1.0;
        ++total;
      }
    }
    if (total > 0) {
      for (double& v : row) v /= static_cast<double>(total);
    }
    X.push_back(std::move(row));
  }
  return X;
}

BenchResult bow_baseline(const Corpus& corpus, std::span<const std::string> patient_ids, std::span<const int> labels,
                         std::size_t k, std::uint64_t seed, const Hyperparams& hyper) {
  const Matrix X = bag_of_words(corpus, patient_ids, hyper.bow_bins);
  const auto folds = kfold_split(patient_ids, labels, k, seed);
  ModelSpec spec{ModelKind::bow_logreg_baseline, hyper, seed};
  return cross_validate(spec, X, labels, folds, seed);
}

namespace {

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json summary_json(const Summary& s) { return Json{{"mean", optional_json(s.mean)}, {"stdev", optional_json(s.stdev)}}; }

std::string cell(const Summary& s) {
  if (!s.mean) return "N/A";
  char buf[32];
  if (s.stdev) {
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", *s.mean, *s.stdev);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f", *s.mean);
  }
  return buf;
}

}  // namespace

Json to_json(const BenchResult& r) {
  Json j;
  j["model"] = to_string(r.kind);
  j["seed"] = r.seed;
  j["k"] = r.k;
  j["auc_roc"] = summary_json(r.auc_roc);
  j["f1"] = summary_json(r.f1);
  j["precision"] = summary_json(r.precision);
  j["recall"] = summary_json(r.recall);
  Json folds = Json::array();
  for (const auto& f : r.folds) {
    folds.push_back(Json{{"fold", f.fold},
                         {"n_train", f.n_train},
                         {"n_test", f.n_test},
                         {"auc_roc", f.auc_roc},
                         {"f1", optional_json(f.f1)},
                         {"precision", optional_json(f.precision)},
                         {"recall", optional_json(f.recall)}});
  }
  j["folds"] = std::move(folds);
  j["warnings"] = r.warnings;
  return j;
}

Json bench_to_json(std::span<const BenchResult> results) {
  Json j = Json::array();
  for (const auto& r : results) j.push_back(to_json(r));
  return j;
}

std::string render_bench(std::span<const BenchResult> results) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %-14s %-14s %-14s %-14s\n", "Model", "AUC-ROC", "F1", "Precision", "Recall");
  out += buf;
  for (const auto& r : results) {
    // "±" is two bytes in UTF-8, so pad by hand.
    auto padded = [](std::string s) {
      const std::size_t width = text::utf8_length(s);
      if (width < 14) s.append(14 - width, ' ');
      return s;
    };
    out += std::string(to_string(r.kind));
    out.append(to_string(r.kind).size() < 22 ? 22 - to_string(r.kind).size() : 0, ' ');
    out += " " + padded(cell(r.auc_roc)) + " " + padded(cell(r.f1)) + " " + padded(cell(r.precision)) + " " +
           padded(cell(r.recall));
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += "\n";
  }
  return out;
}

}  // namespace symscreen
