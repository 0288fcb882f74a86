// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include <algorithm>
#include <cmath>
#include <numeric>

#include "symscreen/error.hpp"
#include "symscreen/rng.hpp"
#include "symscreen/screen.hpp"

namespace symscreen {

using Json = nlohmann::ordered_json;

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::logreg: return "logreg";
    case ModelKind::tree: return "tree";
    case ModelKind::forest: return "forest";
    case ModelKind::linear_svm: return "linear_svm";
    case ModelKind::mlp: return "mlp";
    case ModelKind::bow_logreg_baseline: return "bow_logreg_baseline";
  }
  return "logreg";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "logreg") return ModelKind::logreg;
  if (s == "tree") return ModelKind::tree;
  if (s == "forest") return ModelKind::forest;
  if (s == "linear_svm" || s == "svm") return ModelKind::linear_svm;
  if (s == "mlp") return ModelKind::mlp;
  if (s == "bow_logreg_baseline" || s == "bow") return ModelKind::bow_logreg_baseline;
  throw ValidationError("unknown model '" + std::string(s) + "'");
}

void Hyperparams::validate() const {
  auto positive = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string(what) + " must be positive");
  };
  positive(logreg_lambda >= 0.0, "logreg_lambda");
  positive(logreg_iterations > 0, "logreg_iterations");
  positive(logreg_step > 0.0, "logreg_step");
  positive(tree_max_depth > 0, "tree_max_depth");
  positive(tree_min_leaf > 0, "tree_min_leaf");
  positive(forest_trees > 0, "forest_trees");
  positive(forest_max_depth > 0, "forest_max_depth");
  positive(forest_min_leaf > 0, "forest_min_leaf");
  positive(svm_lambda > 0.0, "svm_lambda");
  positive(svm_epochs > 0, "svm_epochs");
  positive(mlp_hidden > 0, "mlp_hidden");
  positive(mlp_epochs > 0, "mlp_epochs");
  positive(mlp_step > 0.0, "mlp_step");
  positive(mlp_init > 0.0, "mlp_init");
  positive(bow_bins > 0, "bow_bins");
}

Json to_json(const Hyperparams& h) {
  return Json{{"logreg_lambda", h.logreg_lambda},     {"logreg_iterations", h.logreg_iterations},
              {"logreg_step", h.logreg_step},         {"tree_max_depth", h.tree_max_depth},
              {"tree_min_leaf", h.tree_min_leaf},     {"forest_trees", h.forest_trees},
              {"forest_max_depth", h.forest_max_depth}, {"forest_min_leaf", h.forest_min_leaf},
              {"svm_lambda", h.svm_lambda},           {"svm_epochs", h.svm_epochs},
              {"mlp_hidden", h.mlp_hidden},           {"mlp_epochs", h.mlp_epochs},
              {"mlp_step", h.mlp_step},               {"mlp_init", h.mlp_init},
              {"bow_bins", h.bow_bins}};
}

Hyperparams hyperparams_from_json(const Json& j) {
  Hyperparams h;
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  read("logreg_lambda", h.logreg_lambda);
  read("logreg_iterations", h.logreg_iterations);
  read("logreg_step", h.logreg_step);
  read("tree_max_depth", h.tree_max_depth);
  read("tree_min_leaf", h.tree_min_leaf);
  read("forest_trees", h.forest_trees);
  read("forest_max_depth", h.forest_max_depth);
  read("forest_min_leaf", h.forest_min_leaf);
  read("svm_lambda", h.svm_lambda);
  read("svm_epochs", h.svm_epochs);
  read("mlp_hidden", h.mlp_hidden);
  read("mlp_epochs", h.mlp_epochs);
  read("mlp_step", h.mlp_step);
  read("mlp_init", h.mlp_init);
  read("bow_bins", h.bow_bins);
  h.validate();
  return h;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// --- constant ----------------------------------------------------------------

class ConstantModel final : public Model {
 public:
  explicit ConstantModel(double value) : value_(value) {}
  double score(std::span<const double>) const override { return value_; }

 private:
  double value_;
};

// --- logistic regression -----------------------------------------------------

class LinearModel final : public Model {
 public:
  explicit LinearModel(std::vector<double> params) : params_(std::move(params)) {}
  double score(std::span<const double> x) const override {
    const std::size_t d = params_.size() - 1;
    return sigmoid(dot(std::span(params_).first(d), x) + params_[d]);
  }

 private:
  std::vector<double> params_;
};

std::unique_ptr<Model> train_logreg(const Hyperparams& h, const Matrix& X, std::span<const int> y) {
  std::vector<double> params(X[0].size() + 1, 0.0);
  std::vector<double> grad;
  for (int it = 0; it < h.logreg_iterations; ++it) {
    logistic_loss(params, X, y, h.logreg_lambda, &grad);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= h.logreg_step * grad[i];
  }
  return std::make_unique<LinearModel>(std::move(params));
}

// --- CART --------------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  double value = 0.0;  // positive fraction at the node
};

struct TreeOptions {
  int max_depth = 6;
  std::size_t min_leaf = 5;
  std::size_t max_features = 0;  // 0 means all
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, std::span<const int> y, TreeOptions opts, Rng* rng)
      : X_(X), y_(y), opts_(opts), rng_(rng) {}

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  static double gini(double pos, double n) {
    if (n <= 0) return 0.0;
    const double p = pos / n;
    return 2.0 * p * (1.0 - p);
  }

  std::size_t grow(std::vector<std::size_t> rows, int depth) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({});
    double pos = 0;
    for (std::size_t r : rows) pos += y_[r];
    const double n = static_cast<double>(rows.size());
    nodes_[id].value = pos / n;
    if (depth >= opts_.max_depth || pos == 0 || pos == n || rows.size() < 2 * opts_.min_leaf) return id;

    const std::size_t d = X_[0].size();
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    if (rng_ && opts_.max_features > 0 && opts_.max_features < d) {
      for (std::size_t i = 0; i < opts_.max_features; ++i) {
        std::swap(features[i], features[i + rng_->below(d - i)]);
      }
      features.resize(opts_.max_features);
      std::sort(features.begin(), features.end());
    }

    const double parent = gini(pos, n);
    double best = parent - 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order = rows;
    for (std::size_t f : features) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return X_[a][f] < X_[b][f]; });
      double left_pos = 0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left_pos += y_[order[i]];
        const double lo = X_[order[i]][f];
        const double hi = X_[order[i + 1]][f];
        if (lo == hi) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = order.size() - n_left;
        if (n_left < opts_.min_leaf || n_right < opts_.min_leaf) continue;
        const double nl = static_cast<double>(n_left), nr = static_cast<double>(n_right);
        const double impurity = (nl * gini(left_pos, nl) + nr * gini(pos - left_pos, nr)) / n;
        if (impurity < best) {
          best = impurity;
          best_feature = static_cast<int>(f);
          best_threshold = lo + (hi - lo) / 2.0;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (X_[r][static_cast<std::size_t>(best_feature)] <= best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes_[id].feature = best_feature;
    nodes_[id].threshold = best_threshold;
    const std::size_t l = grow(std::move(left), depth + 1);
    const std::size_t r = grow(std::move(right), depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  const Matrix& X_;
  std::span<const int> y_;
  TreeOptions opts_;
  Rng* rng_;
  std::vector<TreeNode> nodes_;
};

double tree_score(const std::vector<TreeNode>& nodes, std::span<const double> x) {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    i = x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  }
  return nodes[i].value;
}

class TreeModel final : public Model {
 public:
  explicit TreeModel(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}
  double score(std::span<const double> x) const override { return tree_score(nodes_, x); }

 private:
  std::vector<TreeNode> nodes_;
};

class ForestModel final : public Model {
 public:
  explicit ForestModel(std::vector<std::vector<TreeNode>> trees) : trees_(std::move(trees)) {}
  double score(std::span<const double> x) const override {
    double s = 0.0;
    for (const auto& t : trees_) s += tree_score(t, x);
    return s / static_cast<double>(trees_.size());
  }

 private:
  std::vector<std::vector<TreeNode>> trees_;
};

std::unique_ptr<Model> train_tree(const Hyperparams& h, const Matrix& X, std::span<const int> y) {
  std::vector<std::size_t> rows(X.size());
  std::iota(rows.begin(), rows.end(), 0);
  TreeBuilder builder(X, y, {h.tree_max_depth, h.tree_min_leaf, 0}, nullptr);
  return std::make_unique<TreeModel>(builder.build(std::move(rows)));
}

std::unique_ptr<Model> train_forest(const Hyperparams& h, const Matrix& X, std::span<const int> y,
                                    std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t d = X[0].size();
  const auto max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
  std::vector<std::vector<TreeNode>> trees;
  for (int t = 0; t < h.forest_trees; ++t) {
    std::vector<std::size_t> rows(X.size());
    for (auto& r : rows) r = rng.below(X.size());
    TreeBuilder builder(X, y, {h.forest_max_depth, h.forest_min_leaf, max_features}, &rng);
    trees.push_back(builder.build(std::move(rows)));
  }
  return std::make_unique<ForestModel>(std::move(trees));
}

// --- linear SVM ----------------------------------------------------------------

class SvmModel final : public Model {
 public:
  SvmModel(std::vector<double> w, double a, double b) : w_(std::move(w)), a_(a), b_(b) {}
  double margin(std::span<const double> x) const {
    const std::size_t d = w_.size() - 1;
    return dot(std::span(w_).first(d), x) + w_[d];
  }
  double score(std::span<const double> x) const override { return sigmoid(a_ * margin(x) + b_); }

 private:
  std::vector<double> w_;  // weights then bias
  double a_;
  double b_;
};

// Fits p = sigmoid(a*m + b) to labels by Newton's method on the log-loss, with
// the smoothed targets of Platt scaling.
std::pair<double, double> platt_fit(const std::vector<double>& m, std::span<const int> y) {
  double n_pos = 0, n_neg = 0;
  for (int v : y) (v == 1 ? n_pos : n_neg) += 1;
  const double t_pos = (n_pos + 1.0) / (n_pos + 2.0);
  const double t_neg = 1.0 / (n_neg + 2.0);
  double a = 1.0, b = 0.0;
  auto loss = [&](double A, double B) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double z = A * m[i] + B;
      const double t = y[i] == 1 ? t_pos : t_neg;
      s += softplus(z) - t * z;
    }
    return s;
  };
  double current = loss(a, b);
  for (int it = 0; it < 100; ++it) {
    double ga = 0, gb = 0, haa = 1e-12, hab = 0, hbb = 1e-12;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double p = sigmoid(a * m[i] + b);
      const double t = y[i] == 1 ? t_pos : t_neg;
      const double w = p * (1 - p);
      ga += (p - t) * m[i];
      gb += p - t;
      haa += w * m[i] * m[i];
      hab += w * m[i];
      hbb += w;
    }
    if (std::abs(ga) < 1e-10 && std::abs(gb) < 1e-10) break;
    const double det = haa * hbb - hab * hab;
    if (det <= 0) break;
    const double da = (hbb * ga - hab * gb) / det;
    const double db = (haa * gb - hab * ga) / det;
    double step = 1.0;
    bool improved = false;
    while (step > 1e-8) {
      const double next = loss(a - step * da, b - step * db);
      if (next <= current - 1e-4 * step * (ga * da + gb * db)) {
        a -= step * da;
        b -= step * db;
        current = next;
        improved = true;
        break;
      }
      step /= 2;
    }
    if (!improved) break;
  }
  return {a, b};
}

std::unique_ptr<Model> train_svm(const Hyperparams& h, const Matrix& X, std::span<const int> y,
                                 std::uint64_t seed) {
  const std::size_t d = X[0].size();
  std::vector<double> w(d + 1, 0.0);  // the bias is an augmented constant feature
  std::vector<std::size_t> order(X.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < h.svm_epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (h.svm_lambda * static_cast<double>(t));
      const double label = y[i] == 1 ? 1.0 : -1.0;
      const double m = dot(std::span(w).first(d), X[i]) + w[d];
      const double shrink = 1.0 - eta * h.svm_lambda;
      for (double& v : w) v *= shrink;
      if (label * m < 1.0) {
        for (std::size_t j = 0; j < d; ++j) w[j] += eta * label * X[i][j];
        w[d] += eta * label;
      }
    }
  }
  SvmModel raw(w, 1.0, 0.0);
  std::vector<double> margins;
  margins.reserve(X.size());
  for (const auto& x : X) margins.push_back(raw.margin(x));
  const auto [a, b] = platt_fit(margins, y);
  return std::make_unique<SvmModel>(std::move(w), a, b);
}

// --- MLP ---------------------------------------------------------------------

struct MlpView {
  std::span<const double> w1, b1, w2;
  double b2;
};

MlpView mlp_view(std::span<const double> p, std::size_t d, std::size_t h) {
  return {p.subspan(0, h * d), p.subspan(h * d, h), p.subspan(h * d + h, h), p[h * d + 2 * h]};
}

double mlp_forward(const MlpView& v, std::size_t h, std::span<const double> x, std::vector<double>& hidden) {
  const std::size_t d = x.size();
  hidden.resize(h);
  double z = v.b2;
  for (std::size_t j = 0; j < h; ++j) {
    hidden[j] = std::tanh(dot(v.w1.subspan(j * d, d), x) + v.b1[j]);
    z += v.w2[j] * hidden[j];
  }
  return z;
}

class MlpModel final : public Model {
 public:
  MlpModel(std::vector<double> params, std::size_t d, std::size_t h) : params_(std::move(params)), d_(d), h_(h) {}
  double score(std::span<const double> x) const override {
    std::vector<double> hidden;
    return sigmoid(mlp_forward(mlp_view(params_, d_, h_), h_, x, hidden));
  }

 private:
  std::vector<double> params_;
  std::size_t d_;
  std::size_t h_;
};

std::unique_ptr<Model> train_mlp(const Hyperparams& h, const Matrix& X, std::span<const int> y, std::uint64_t seed) {
  const std::size_t d = X[0].size();
  std::vector<double> params(mlp_param_count(d, h.mlp_hidden), 0.0);
  Rng rng(seed);
  for (std::size_t i = 0; i < h.mlp_hidden * d; ++i) params[i] = rng.uniform(-h.mlp_init, h.mlp_init);
  for (std::size_t j = 0; j < h.mlp_hidden; ++j) {
    params[h.mlp_hidden * d + h.mlp_hidden + j] = rng.uniform(-h.mlp_init, h.mlp_init);
  }
  std::vector<double> grad;
  for (int epoch = 0; epoch < h.mlp_epochs; ++epoch) {
    mlp_loss(params, h.mlp_hidden, X, y, &grad);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= h.mlp_step * grad[i];
  }
  return std::make_unique<MlpModel>(std::move(params), d, h.mlp_hidden);
}

}  // namespace

double logistic_loss(std::span<const double> params, const Matrix& X, std::span<const int> y, double lambda,
                     std::vector<double>* grad) {
  const std::size_t d = params.size() - 1;
  const double n = static_cast<double>(X.size());
  if (grad) grad->assign(params.size(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double z = dot(params.first(d), X[i]) + params[d];
    loss += softplus(z) - y[i] * z;
    if (grad) {
      const double r = (sigmoid(z) - y[i]) / n;
      for (std::size_t j = 0; j < d; ++j) (*grad)[j] += r * X[i][j];
      (*grad)[d] += r;
    }
  }
  loss /= n;
  for (std::size_t j = 0; j < d; ++j) {
    loss += 0.5 * lambda * params[j] * params[j];
    if (grad) (*grad)[j] += lambda * params[j];
  }
  return loss;
}

std::size_t mlp_param_count(std::size_t inputs, std::size_t hidden) { return hidden * inputs + 2 * hidden + 1; }

double mlp_loss(std::span<const double> params, std::size_t hidden, const Matrix& X, std::span<const int> y,
                std::vector<double>* grad) {
  const std::size_t d = X.empty() ? 0 : X[0].size();
  if (params.size() != mlp_param_count(d, hidden)) throw ValidationError("mlp parameter count mismatch");
  const MlpView v = mlp_view(params, d, hidden);
  const double n = static_cast<double>(X.size());
  if (grad) grad->assign(params.size(), 0.0);
  std::vector<double> h;
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double z = mlp_forward(v, hidden, X[i], h);
    loss += softplus(z) - y[i] * z;
    if (!grad) continue;
    const double dz = (sigmoid(z) - y[i]) / n;
    auto& g = *grad;
    for (std::size_t j = 0; j < hidden; ++j) {
      g[hidden * d + hidden + j] += dz * h[j];
      const double da = dz * v.w2[j] * (1.0 - h[j] * h[j]);
      for (std::size_t k = 0; k < d; ++k) g[j * d + k] += da * X[i][k];
      g[hidden * d + j] += da;
    }
    g[hidden * d + 2 * hidden] += dz;
  }
  return loss / n;
}

std::unique_ptr<Model> train(const ModelSpec& spec, const Matrix& X, std::span<const int> y, std::string* warning) {
  if (X.empty()) throw ValidationError("training set is empty");
  if (X.size() != y.size()) throw ValidationError("X and y differ in length");
  const std::size_t d = X[0].size();
  if (d == 0) throw ValidationError("feature dimension is zero");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() != d) throw ValidationError("inconsistent feature dimension at row " + std::to_string(i));
    if (y[i] != 0 && y[i] != 1) throw ValidationError("labels must be 0 or 1");
    pos += static_cast<std::size_t>(y[i]);
  }
  spec.hyper.validate();
  if (pos == 0 || pos == X.size()) {
    if (warning) *warning = "single-class training labels; using a constant model";
    return std::make_unique<ConstantModel>(pos == 0 ? 0.0 : 1.0);
  }
  switch (spec.kind) {
    case ModelKind::logreg:
    case ModelKind::bow_logreg_baseline: return train_logreg(spec.hyper, X, y);
    case ModelKind::tree: return train_tree(spec.hyper, X, y);
    case ModelKind::forest: return train_forest(spec.hyper, X, y, spec.seed);
    case ModelKind::linear_svm: return train_svm(spec.hyper, X, y, spec.seed);
    case ModelKind::mlp: return train_mlp(spec.hyper, X, y, spec.seed);
  }
  throw ValidationError("unsupported model kind");
}

}  // namespace symscreen
