// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "symscreen/corpus.hpp"
#include "symscreen/extract.hpp"
#include "symscreen/taxonomy.hpp"

namespace symscreen {

using Matrix = std::vector<std::vector<double>>;
using Labels = std::vector<int>;

// ---------------------------------------------------------------------------
// Symptom vectors

struct SymptomVector {
  std::string patient_id;
  std::vector<double> values;  ///< one proportion per category, taxonomy order
  std::size_t n_notes = 0;

  friend bool operator==(const SymptomVector&, const SymptomVector&) = default;
};

struct VectorizeResult {
  std::vector<SymptomVector> vectors;  ///< corpus patient order
  std::vector<std::string> skipped;    ///< patients without notes
};

/// Detections for notes outside the corpus are ignored; backend_error and
/// unparseable detections count as negative.
VectorizeResult vectorize(std::span<const Detection> detections, const Corpus& corpus,
                          const Taxonomy& taxonomy = Taxonomy::canonical());

/// 1 for cases, 0 for controls, aligned with `vectors`.
Labels case_labels(std::span<const SymptomVector> vectors, const Corpus& corpus);

Matrix feature_matrix(std::span<const SymptomVector> vectors);

// ---------------------------------------------------------------------------
// Cross-validation

/// Stratified k-fold split returning row indices per fold. Each class is
/// shuffled with `seed` and dealt round-robin; negatives continue from the
/// fold after the last positive so fold sizes differ by at most one.
/// Throws ValidationError when k < 2 or a class has fewer than k members.
std::vector<std::vector<std::size_t>> kfold_split(std::span<const std::string> patient_ids, std::span<const int> labels,
                                                  std::size_t k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Models

enum class ModelKind { logreg, tree, forest, linear_svm, mlp, bow_logreg_baseline };

std::string to_string(ModelKind k);
/// Accepts the canonical names plus the CLI short forms "svm" and "bow".
ModelKind parse_model_kind(std::string_view s);

struct Hyperparams {
  double logreg_lambda = 1e-2;
  int logreg_iterations = 500;
  double logreg_step = 0.1;

  int tree_max_depth = 6;
  std::size_t tree_min_leaf = 5;

  int forest_trees = 100;
  int forest_max_depth = 8;
  std::size_t forest_min_leaf = 1;

  double svm_lambda = 1e-2;
  int svm_epochs = 50;

  std::size_t mlp_hidden = 16;
  int mlp_epochs = 300;
  double mlp_step = 0.05;
  double mlp_init = 0.5;

  std::size_t bow_bins = 4096;

  /// Throws ValidationError for non-positive sizes, steps or iteration counts.
  void validate() const;
};

nlohmann::ordered_json to_json(const Hyperparams& h);
/// Missing fields keep their defaults.
Hyperparams hyperparams_from_json(const nlohmann::ordered_json& j);

struct ModelSpec {
  ModelKind kind = ModelKind::logreg;
  Hyperparams hyper;
  std::uint64_t seed = 7;
};

class Model {
 public:
  virtual ~Model() = default;
  /// Calibrated score in [0,1]; higher means more case-like.
  [[nodiscard]] virtual double score(std::span<const double> x) const = 0;
  [[nodiscard]] int predict(std::span<const double> x) const { return score(x) >= 0.5 ? 1 : 0; }
};

/// Fits a model on rows of X. A single-class y yields a constant model and a
/// message in `warning` (when given). Throws ValidationError on empty or
/// ragged input, or labels outside {0,1}.
std::unique_ptr<Model> train(const ModelSpec& spec, const Matrix& X, std::span<const int> y,
                             std::string* warning = nullptr);

/// Mean log-loss plus lambda/2 * |w|^2, with params = [w_1..w_d, b] and the bias
/// unregularized. Fills `grad` (same size as params) when non-null.
double logistic_loss(std::span<const double> params, const Matrix& X, std::span<const int> y, double lambda,
                     std::vector<double>* grad = nullptr);

/// Parameter count of a one-hidden-layer network: W1 (h x d), b1 (h), w2 (h), b2.
std::size_t mlp_param_count(std::size_t inputs, std::size_t hidden);

/// Mean log-loss of the tanh/sigmoid network; gradient into `grad` when non-null.
double mlp_loss(std::span<const double> params, std::size_t hidden, const Matrix& X, std::span<const int> y,
                std::vector<double>* grad = nullptr);

// ---------------------------------------------------------------------------
// Metrics and the bench

/// Mann-Whitney AUC as an exact fraction: `twice_wins` counts each winning
/// (positive, negative) pair as 2 and each tie as 1; AUC = twice_wins / (2 * pairs).
struct AucFraction {
  std::uint64_t twice_wins = 0;
  std::uint64_t pairs = 0;
  [[nodiscard]] double value() const { return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pairs)); }
  friend bool operator==(const AucFraction&, const AucFraction&) = default;
};

/// Throws ValidationError on length mismatch or when a class is missing.
AucFraction auc_fraction(std::span<const double> scores, std::span<const int> labels);
double auc_roc(std::span<const double> scores, std::span<const int> labels);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double auc_roc = 0.0;
  std::optional<double> f1;
  std::optional<double> precision;
  std::optional<double> recall;
};

struct Summary {
  std::optional<double> mean;
  std::optional<double> stdev;  ///< sample standard deviation; absent below two folds
};

struct BenchResult {
  ModelKind kind = ModelKind::logreg;
  std::uint64_t seed = 7;
  std::size_t k = 5;
  Summary auc_roc;
  Summary f1;
  Summary precision;
  Summary recall;
  std::vector<FoldResult> folds;
  std::vector<std::string> warnings;
};

/// Cross-validates each spec over the same stratified folds. Metrics are fold
/// means over folds where the metric is defined.
std::vector<BenchResult> run_bench(std::span<const ModelSpec> specs, const Matrix& X, std::span<const int> y,
                                   std::span<const std::string> patient_ids, std::size_t k, std::uint64_t seed);

/// Hashed term-frequency rows (token count / total tokens) of each patient's
/// concatenated notes, in `patient_ids` order.
Matrix bag_of_words(const Corpus& corpus, std::span<const std::string> patient_ids, std::size_t bins = 4096);

/// Logistic regression over bag_of_words features with the same CV protocol.
BenchResult bow_baseline(const Corpus& corpus, std::span<const std::string> patient_ids, std::span<const int> labels,
                         std::size_t k, std::uint64_t seed, const Hyperparams& hyper = {});

nlohmann::ordered_json to_json(const BenchResult& r);
nlohmann::ordered_json bench_to_json(std::span<const BenchResult> results);

/// Model rows with AUC-ROC, F1, precision and recall as "mean ± stdev".
std::string render_bench(std::span<const BenchResult> results);

}  // namespace symscreen
