// Acceptance checks for the screening pipeline. Prints one PASS/FAIL line per
// criterion and exits non-zero when any fails.

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "symscreen/eval.hpp"
#include "symscreen/extract.hpp"
#include "symscreen/matching.hpp"
#include "symscreen/rng.hpp"
#include "symscreen/screen.hpp"
#include "symscreen/synth.hpp"

using namespace symscreen;
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failed expectation with a message.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && pass_) {
      pass_ = false;
      detail_ = what;
    }
  }
  void note(const std::string& s) {
    if (pass_) detail_ = s;
  }
  Outcome done() const { return {pass_, detail_}; }

 private:
  bool pass_ = true;
  std::string detail_;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Detection> extract_all(const BackendConfig& cfg, const Corpus& corpus) {
  const auto backend = make_backend(cfg, corpus);
  return run_extraction(*backend, corpus, taxonomy(), {.parallelism = 4});
}

BackendConfig backend_named(const std::string& id) {
  for (const auto& b : default_backends()) {
    if (b.backend_id == id) return b;
  }
  throw std::runtime_error("missing backend " + id);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

Outcome oracle_extraction() {
  Check c;
  const auto t0 = Clock::now();
  SynthSpec spec = SynthSpec::reference_defaults();
  spec.seed = 21;
  const auto synth = synthesize(spec);
  c.expect(synth.corpus.notes().size() >= 200, "fewer than 200 notes");
  std::set<std::string> planted;
  for (const auto& g : synth.corpus.gold()) {
    if (g.present) planted.insert(g.category_id);
  }
  c.expect(planted.size() == 16, "not every category planted");

  const auto dets = extract_all(backend_named("mock"), synth.corpus);
  const auto report = score(synth.corpus.gold(), dets);
  c.expect(report.rows.size() == 16, "expected 16 rows");
  for (const auto& r : report.rows) {
    c.expect(r.precision == 1.0 && r.recall == 1.0 && r.f1 == 1.0, "imperfect oracle row " + r.category_id);
  }
  c.expect(report.macro.precision == 1.0 && report.macro.recall == 1.0 && report.macro.f1 == 1.0,
           "macro average below 1.0");
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 10.0, fmt("took %.2fs", elapsed));
  c.note(fmt("%.0f notes, %.2fs", static_cast<double>(synth.corpus.notes().size()), elapsed));
  return c.done();
}

Outcome noisy_calibration() {
  Check c;
  const auto synth = synthesize(SynthSpec::reference_defaults());
  const BackendConfig noisy = backend_named("noisy_mock");
  const double fp_rate = noisy.fp_rate, fn_rate = noisy.fn_rate;
  c.expect(fp_rate == 0.1 && fn_rate == 0.2, "unexpected noisy_mock defaults");
  const auto dets = extract_all(noisy, synth.corpus);
  c.expect(dets.size() >= 2000, "fewer than 2000 pairs");

  double pos = 0, neg = 0, flipped_pos = 0, flipped_neg = 0;
  for (const auto& d : dets) {
    const GoldLabel* g = synth.corpus.find_gold(d.note_id, d.category_id);
    if (g->present) {
      ++pos;
      flipped_pos += !d.present;
    } else {
      ++neg;
      flipped_neg += d.present;
    }
  }
  const double fn_hat = flipped_pos / pos, fp_hat = flipped_neg / neg;
  const double fn_sigma = std::sqrt(fn_rate * (1 - fn_rate) / pos);
  const double fp_sigma = std::sqrt(fp_rate * (1 - fp_rate) / neg);
  c.expect(std::abs(fn_hat - fn_rate) <= 3 * fn_sigma, fmt("fn rate %.4f outside 0.2 +- %.4f", fn_hat, 3 * fn_sigma));
  c.expect(std::abs(fp_hat - fp_rate) <= 3 * fp_sigma, fmt("fp rate %.4f outside 0.1 +- %.4f", fp_hat, 3 * fp_sigma));

  // Pooled eval counts against the analytic expectation from the base rates.
  const auto report = score(synth.corpus.gold(), dets);
  double tp = 0, fp = 0, fn = 0;
  for (const auto& r : report.rows) {
    tp += static_cast<double>(r.tp);
    fp += static_cast<double>(r.fp);
    fn += static_cast<double>(r.fn);
  }
  const double recall = tp / (tp + fn), precision = tp / (tp + fp);
  const double exp_recall = 1 - fn_rate;
  const double a = pos * (1 - fn_rate), b = neg * fp_rate;
  const double exp_precision = a / (a + b);
  const double var_a = pos * fn_rate * (1 - fn_rate), var_b = neg * fp_rate * (1 - fp_rate);
  const double precision_sigma = std::sqrt(b * b * var_a + a * a * var_b) / ((a + b) * (a + b));
  c.expect(std::abs(recall - exp_recall) <= 3 * fn_sigma,
           fmt("recall %.4f vs expected %.4f", recall, exp_recall));
  c.expect(std::abs(precision - exp_precision) <= 3 * precision_sigma,
           fmt("precision %.4f vs expected %.4f (3 sigma %.4f)", precision, exp_precision, 3 * precision_sigma));
  c.note(fmt("fp %.4f, fn %.4f, precision %.4f (expected %.4f)", fp_hat, fn_hat, precision, exp_precision));
  return c.done();
}

Outcome baseline_inferiority() {
  Check c;
  SynthSpec spec = SynthSpec::uniform(0.15);
  spec.paraphrase_rate = 0.5;
  const auto synth = synthesize(spec);
  const auto keyword = score(synth.corpus.gold(), extract_all(backend_named("keyword"), synth.corpus));
  const auto oracle = score(synth.corpus.gold(), extract_all(backend_named("mock"), synth.corpus));
  c.expect(keyword.macro.recall.has_value() && *keyword.macro.recall <= 0.6,
           fmt("keyword macro recall %.3f", keyword.macro.recall.value_or(-1)));
  c.expect(oracle.macro.recall == 1.0, "oracle macro recall below 1.0");
  c.note(fmt("keyword macro recall %.3f, oracle %.3f", keyword.macro.recall.value_or(-1),
             oracle.macro.recall.value_or(-1)));
  return c.done();
}

Outcome metric_oracle() {
  Check c;
  Rng rng(1000);
  const std::vector<std::string> cats{"not_going_to_school", "sleep_problems", "suicidal_thoughts"};
  std::size_t na_cells = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<GoldLabel> gold;
    std::vector<Detection> dets;
    const auto notes = rng.below(8);
    for (std::uint64_t n = 0; n < notes; ++n) {
      for (const auto& cat : cats) {
        const std::string id = "N" + std::to_string(n);
        if (rng.bernoulli(0.85)) gold.push_back(GoldLabel{id, cat, rng.bernoulli(0.35), {}});
        if (rng.bernoulli(0.85)) {
          Detection d;
          d.note_id = id;
          d.category_id = cat;
          d.present = rng.bernoulli(0.35);
          dets.push_back(d);
        }
      }
    }
    const auto report = score(gold, dets);

    // Brute force: naive double loop per category, metrics from their definitions.
    std::vector<CategoryScore> expected;
    for (const auto& cat : cats) {
      std::size_t tp = 0, fp = 0, fn = 0, tn = 0, labeled = 0;
      for (const auto& g : gold) {
        if (g.category_id != cat) continue;
        ++labeled;
        for (const auto& d : dets) {
          if (d.category_id != cat || d.note_id != g.note_id) continue;
          if (g.present && d.present) ++tp;
          else if (!g.present && d.present) ++fp;
          else if (g.present && !d.present) ++fn;
          else ++tn;
        }
      }
      if (labeled == 0) continue;  // a category gets a row once it has gold labels
      CategoryScore s;
      s.category_id = cat;
      s.tp = tp;
      s.fp = fp;
      s.fn = fn;
      s.tn = tn;
      if (tp + fp != 0) s.precision = double(tp) / double(tp + fp);
      if (tp + fn != 0) s.recall = double(tp) / double(tp + fn);
      if (s.precision && s.recall && tp != 0) s.f1 = double(2 * tp) / double(2 * tp + fp + fn);
      na_cells += !s.precision + !s.recall + !s.f1;
      expected.push_back(s);
    }
    if (report.rows != expected) {
      c.expect(false, "row mismatch in trial " + std::to_string(trial));
      break;
    }
    MacroAverage macro;
    auto mean = [&](Metric CategoryScore::*field) -> Metric {
      double sum = 0;
      std::size_t n = 0;
      for (const auto& r : expected) {
        if (r.*field) {
          sum += *(r.*field);
          ++n;
        }
      }
      return n ? Metric(sum / double(n)) : std::nullopt;
    };
    macro = {mean(&CategoryScore::precision), mean(&CategoryScore::recall), mean(&CategoryScore::f1)};
    if (!(report.macro == macro)) {
      c.expect(false, "macro mismatch in trial " + std::to_string(trial));
      break;
    }
  }
  c.expect(na_cells > 0, "no N/A cells exercised");
  c.note(fmt("1000 sets, %.0f N/A cells", static_cast<double>(na_cells)));
  return c.done();
}

Outcome auc_oracle() {
  Check c;
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.below(12)) / 8.0;  // coarse grid forces ties
      labels[i] = rng.bernoulli(0.4);
    }
    labels[0] = 1;
    labels[1] = 0;
    std::uint64_t twice = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (labels[i] != 1 || labels[j] != 0) continue;
        ++pairs;
        twice += scores[i] > scores[j] ? 2 : (scores[i] == scores[j] ? 1 : 0);
      }
    }
    const AucFraction got = auc_fraction(scores, labels);
    if (!(got == AucFraction{twice, pairs}) || auc_roc(scores, labels) != double(twice) / double(2 * pairs)) {
      c.expect(false, "mismatch in trial " + std::to_string(trial));
      break;
    }
  }

  const std::vector<std::function<double(double, double)>> families{
      [](double x, double a) { return a * x + 3.0; },
      [](double x, double a) { return std::exp(a * x); },
      [](double x, double a) { return x * x * x + a * x; },
      [](double x, double a) { return std::log1p(x) * a; },
      [](double x, double a) { return 1.0 / (1.0 + std::exp(-a * (x - 2.0))); },
  };
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 10 + rng.below(30);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.below(20)) / 4.0;
      labels[i] = rng.bernoulli(0.5);
    }
    labels[0] = 1;
    labels[1] = 0;
    const double a = rng.uniform(0.5, 2.0);
    const auto& f = families[static_cast<std::size_t>(t) % families.size()];
    std::vector<double> mapped(n);
    for (std::size_t i = 0; i < n; ++i) mapped[i] = f(scores[i], a);
    if (!(auc_fraction(scores, labels) == auc_fraction(mapped, labels))) {
      c.expect(false, "transform " + std::to_string(t) + " changed the AUC");
      break;
    }
  }
  c.note("1000 brute-force sets, 100 monotone transforms");
  return c.done();
}

Outcome gradient_check() {
  Check c;
  Rng rng(606);
  Matrix X(30, std::vector<double>(5));
  Labels y(30);
  for (std::size_t i = 0; i < X.size(); ++i) {
    for (auto& v : X[i]) v = rng.uniform(-1, 1);
    y[i] = rng.bernoulli(0.5);
  }
  double worst = 0;
  auto check_point = [&](std::size_t dim, const std::function<double(const std::vector<double>&, std::vector<double>*)>& f) {
    std::vector<double> p(dim);
    for (auto& v : p) v = rng.uniform(-1, 1);
    std::vector<double> analytic;
    f(p, &analytic);
    double diff = 0, norm_a = 0, norm_n = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double h = 1e-5;
      auto up = p, down = p;
      up[i] += h;
      down[i] -= h;
      const double numeric = (f(up, nullptr) - f(down, nullptr)) / (2 * h);
      diff += (numeric - analytic[i]) * (numeric - analytic[i]);
      norm_a += analytic[i] * analytic[i];
      norm_n += numeric * numeric;
    }
    const double rel = std::sqrt(diff) / std::max(std::sqrt(norm_a) + std::sqrt(norm_n), 1e-12);
    worst = std::max(worst, rel);
    return rel <= 1e-5;
  };
  for (int i = 0; i < 20; ++i) {
    c.expect(check_point(6, [&](const std::vector<double>& p, std::vector<double>* g) {
      return logistic_loss(p, X, y, 0.01, g);
    }), "logreg gradient mismatch at point " + std::to_string(i));
    c.expect(check_point(mlp_param_count(5, 6), [&](const std::vector<double>& p, std::vector<double>* g) {
      return mlp_loss(p, 6, X, y, g);
    }), "mlp gradient mismatch at point " + std::to_string(i));
  }
  c.note(fmt("worst relative error %.2e", worst));
  return c.done();
}

Outcome screening_lift() {
  Check c;
  const auto t0 = Clock::now();
  const auto synth = synthesize(SynthSpec::reference_defaults());
  const auto dets = extract_all(backend_named("mock"), synth.corpus);
  const auto vec = vectorize(dets, synth.corpus);
  const Matrix X = feature_matrix(vec.vectors);
  const Labels y = case_labels(vec.vectors, synth.corpus);
  std::vector<std::string> ids;
  for (const auto& v : vec.vectors) ids.push_back(v.patient_id);

  std::vector<ModelSpec> specs;
  for (auto kind : {ModelKind::logreg, ModelKind::tree, ModelKind::forest, ModelKind::linear_svm, ModelKind::mlp}) {
    specs.push_back(ModelSpec{kind, {}, 7});
  }
  const auto results = run_bench(specs, X, y, ids, 5, 7);
  const auto bow = bow_baseline(synth.corpus, ids, y, 5, 7);
  const double bow_auc = bow.auc_roc.mean.value_or(1.0);
  std::string summary;
  for (const auto& r : results) {
    const double auc = r.auc_roc.mean.value_or(0.0);
    summary += to_string(r.kind) + fmt(" %.3f, ", auc);
    c.expect(auc >= 0.65, to_string(r.kind) + fmt(" AUC %.3f below 0.65", auc));
    c.expect(auc > bow_auc, to_string(r.kind) + fmt(" AUC %.3f not above bow %.3f", auc, bow_auc));
  }
  summary += fmt("bow %.3f", bow_auc);

  std::map<ModelKind, double> null_sum;
  for (std::uint64_t s = 0; s < 10; ++s) {
    Labels shuffled = y;
    Rng rng(9000 + s);
    rng.shuffle(std::span<int>(shuffled));
    for (const auto& r : run_bench(specs, X, shuffled, ids, 5, 100 + s)) {
      null_sum[r.kind] += r.auc_roc.mean.value_or(0.0);
    }
  }
  summary += "; null";
  for (const auto& [kind, sum] : null_sum) {
    const double mean = sum / 10.0;
    summary += fmt(" %.3f", mean);
    c.expect(std::abs(mean - 0.5) <= 0.1, to_string(kind) + fmt(" null AUC %.3f", mean));
  }
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 60.0, fmt("took %.1fs", elapsed));
  c.note(summary + fmt("; %.1fs", elapsed));
  return c.done();
}

Outcome prompt_goldens() {
  Check c;
  const fs::path dir = SYMSCREEN_GOLDEN_DIR;
  std::string fixture = read_file(dir / "fixture_note.txt");
  while (!fixture.empty() && fixture.back() == '\n') fixture.pop_back();
  const Taxonomy& t = Taxonomy::canonical();
  for (const char* id : {"not_going_to_school", "neglecting_activities"}) {
    const auto& cat = t.at(id);
    const std::string got = build_chat_prompt(cat, fixture, t.shots_for(cat)).to_json().dump(2) + "\n";
    const std::string golden = read_file(dir / (std::string("chat_") + id + ".json"));
    c.expect(got == golden, std::string("chat prompt differs for ") + id);
    c.expect(golden.find("\"You are a medical AI assistant.\"") != std::string::npos, "system turn missing");
  }
  const std::string school = read_file(dir / "chat_not_going_to_school.json");
  c.expect(school.find("Yes: 'He had to be home-schooled this year.'") != std::string::npos, "positive shot missing");
  const std::string entail = read_file(dir / "entailment_no_motivation.txt");
  c.expect(build_entailment_prompt(t.at("no_motivation"), fixture) == entail, "entailment prompt differs");
  c.expect(entail.ends_with("Does the premise entail the hypothesis?"), "entailment question missing");
  c.expect(entail.find("The patient is not taking proper care of themselves and their health.") != std::string::npos,
           "hypothesis missing");
  c.note("3 golden files");
  return c.done();
}

// 18 months before `d`, clamping the day to the target month.
Date months_before(const Date& d, int months) {
  const auto ymd = d.ymd();
  int total = static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1 - months;
  const int year = total / 12;
  const unsigned month = static_cast<unsigned>(total % 12) + 1;
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  unsigned last = kDays[month - 1];
  if (month == 2 && (year % 4 == 0 && (year % 100 != 0 || year % 400 == 0))) last = 29;
  return Date(year, month, std::min(static_cast<unsigned>(ymd.day()), last));
}

Outcome matching_correctness() {
  Check c;
  Rng rng(500);
  std::size_t total_pairs = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Patient> cases, pool;
    VisitIndex visits;
    const Date base(2006, 1, 1);
    const auto n_cases = 1 + rng.below(8), n_pool = rng.below(25);
    auto random_gender = [&] { return rng.bernoulli(0.5) ? Gender::F : (rng.bernoulli(0.9) ? Gender::M : Gender::other); };
    for (std::uint64_t i = 0; i < n_cases; ++i) {
      Patient p{"C" + std::to_string(i), base.plus_days(rng.between(0, 120)), random_gender(), true,
                Date(2020, 1, 1).plus_days(rng.between(0, 700))};
      cases.push_back(p);
    }
    for (std::uint64_t i = 0; i < n_pool; ++i) {
      Patient p{"K" + std::to_string(rng.below(1000)) + "_" + std::to_string(i), base.plus_days(rng.between(0, 120)),
                random_gender(), false, std::nullopt};
      if (rng.bernoulli(0.15)) p.diagnosis_date = Date(2019, 6, 1).plus_days(rng.between(0, 1000));
      auto& v = visits[p.patient_id];
      for (auto k = rng.below(4); k > 0; --k) v.push_back(Date(2018, 1, 1).plus_days(rng.between(0, 1400)));
      pool.push_back(p);
    }

    const auto result = match_controls(cases, pool, visits);
    std::map<std::string, const Patient*> by_id;
    for (const auto& p : cases) by_id[p.patient_id] = &p;
    for (const auto& p : pool) by_id[p.patient_id] = &p;
    auto eligible = [&](const Patient& cs, const Patient& ct) {
      if (cs.gender != ct.gender) return false;
      if (std::abs(days_between(cs.birth_date, ct.birth_date)) > 30) return false;
      if (ct.diagnosis_date && *ct.diagnosis_date <= *cs.diagnosis_date) return false;
      const Date lo = months_before(*cs.diagnosis_date, 18);
      const auto it = visits.find(ct.patient_id);
      if (it == visits.end()) return false;
      return std::any_of(it->second.begin(), it->second.end(),
                         [&](const Date& v) { return v > lo && v <= *cs.diagnosis_date; });
    };

    std::set<std::string> used, matched_cases;
    for (const auto& [case_id, control_id] : result.pairs) {
      c.expect(by_id.count(case_id) && by_id.count(control_id), "unknown id in pair");
      if (!by_id.count(case_id) || !by_id.count(control_id)) break;
      c.expect(eligible(*by_id[case_id], *by_id[control_id]),
               "ineligible pair " + case_id + "/" + control_id + " in trial " + std::to_string(trial));
      c.expect(used.insert(control_id).second, "control reused in trial " + std::to_string(trial));
      matched_cases.insert(case_id);
    }
    c.expect(matched_cases.size() + result.unmatched.size() == cases.size(), "cases lost");
    // Greedy maximality: an unmatched case has no eligible control left unused.
    for (const auto& id : result.unmatched) {
      for (const auto& ct : pool) {
        c.expect(used.count(ct.patient_id) || !eligible(*by_id[id], ct),
                 "unmatched case " + id + " had a free eligible control in trial " + std::to_string(trial));
      }
    }
    total_pairs += result.pairs.size();
  }
  c.note(fmt("500 pools, %.0f pairs checked", static_cast<double>(total_pairs)));
  return c.done();
}

// --- crash safety ------------------------------------------------------------

struct ServerProcess {
  pid_t pid = -1;
  int port = 0;

  ServerProcess(const fs::path& data_dir, const fs::path& corpus_dir) {
    int fds[2];
    if (::pipe(fds) != 0) throw std::runtime_error("pipe failed");
    pid = ::fork();
    if (pid == 0) {
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
      const std::string data = data_dir.string(), corpus = "syn=" + corpus_dir.string();
      std::vector<const char*> argv{SYMSCREEN_CLI_PATH, "serve", "--port", "0", "--data-dir", data.c_str(),
                                    "--corpus", corpus.c_str(), "--format", "jsonl", nullptr};
      ::execv(SYMSCREEN_CLI_PATH, const_cast<char* const*>(argv.data()));
      ::_exit(127);
    }
    ::close(fds[1]);
    std::string line;
    pollfd pfd{fds[0], POLLIN, 0};
    while (line.find('\n') == std::string::npos) {
      if (::poll(&pfd, 1, 10000) <= 0) break;
      char buf[256];
      const ssize_t n = ::read(fds[0], buf, sizeof buf);
      if (n <= 0) break;
      line.append(buf, static_cast<std::size_t>(n));
    }
    ::close(fds[0]);
    if (line.find('\n') == std::string::npos) {
      kill();
      throw std::runtime_error("server did not report its port");
    }
    port = Json::parse(line.substr(0, line.find('\n')))["port"].get<int>();
  }
  void kill() {
    if (pid > 0) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
      pid = -1;
    }
  }
  ~ServerProcess() { kill(); }
};

Json get_json(httplib::Client& cli, const std::string& path) {
  const auto res = cli.Get(path);
  if (!res || res->status != 200) throw std::runtime_error("GET " + path + " failed");
  return Json::parse(res->body);
}

std::string get_text(httplib::Client& cli, const std::string& path) {
  const auto res = cli.Get(path);
  if (!res || res->status != 200) throw std::runtime_error("GET " + path + " failed");
  return res->body;
}

std::string wait_done(httplib::Client& cli, const std::string& run_id) {
  const auto deadline = Clock::now() + std::chrono::seconds(60);
  while (Clock::now() < deadline) {
    const std::string state = get_json(cli, "/api/runs/" + run_id)["state"];
    if (state == "done" || state == "failed") return state;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  return "timeout";
}

Outcome crash_safety() {
  Check c;
  const fs::path root = fs::temp_directory_path() / ("symscreen_accept_crash_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const fs::path corpus_dir = root / "corpus", data_dir = root / "data";
  SynthSpec spec = SynthSpec::reference_defaults();
  spec.n_cases = 10;
  spec.n_controls = 10;
  write_corpus(synthesize(spec).corpus, corpus_dir);

  std::string run_id;
  std::string gold, merged;
  Rng rng(13);
  auto adjudicate_some = [&](httplib::Client& cli, int n, const std::string& tag) {
    const Json queue = get_json(cli, "/api/runs/" + run_id + "/review");
    static const char* verdicts[] = {"accept", "reject", "modify"};
    for (int i = 0; i < n; ++i) {
      const Json& item = queue[rng.below(queue.size())];
      const std::string text = item["note_text"];
      Json body{{"note_id", item["detection"]["note_id"]}, {"category_id", item["detection"]["category_id"]},
                {"verdict", verdicts[rng.below(3)]}, {"reviewer", rng.bernoulli(0.5) ? "dr_a" : "dr_b"}};
      if (body["verdict"] == "modify") {
        const std::size_t end = 1 + rng.below(text.size());
        body["corrected_evidence"] = Json::array({Json{{"start", 0}, {"end", end}}});
      }
      httplib::Headers headers{{"Idempotency-Key", tag + std::to_string(i)}};
      const auto res = cli.Post("/api/adjudications", headers, body.dump(), "application/json");
      if (!res || res->status != 201) throw std::runtime_error("adjudication rejected");
    }
  };

  try {
    {
      ServerProcess server(data_dir, corpus_dir);
      httplib::Client cli("127.0.0.1", server.port);
      const auto res = cli.Post("/api/runs", R"({"backend_id":"noisy_mock","corpus_ref":"syn"})", "application/json");
      if (!res || res->status != 201) throw std::runtime_error("run not created");
      run_id = Json::parse(res->body)["run_id"];
      c.expect(wait_done(cli, run_id) == "done", "first run did not finish");
      adjudicate_some(cli, 40, "a");
      gold = get_text(cli, "/api/runs/" + run_id + "/gold");
      merged = get_text(cli, "/api/runs/" + run_id + "/gold?merge=true");
      // Kill while a second run is in flight.
      cli.Post("/api/runs", R"({"backend_id":"mock","corpus_ref":"syn"})", "application/json");
      server.kill();
    }
    {
      // A write torn by the crash.
      std::ofstream torn(data_dir / "adjudications.log", std::ios::app | std::ios::binary);
      torn << R"({"adjudication":{"adjudication_id":"A9)";
    }
    {
      ServerProcess server(data_dir, corpus_dir);
      httplib::Client cli("127.0.0.1", server.port);
      c.expect(get_text(cli, "/api/runs/" + run_id + "/gold") == gold, "gold projection changed after restart");
      c.expect(get_text(cli, "/api/runs/" + run_id + "/gold?merge=true") == merged, "merged projection changed");
      const Json runs = get_json(cli, "/api/runs");
      c.expect(runs.size() == 2, "second run not recovered");
      if (runs.size() == 2) {
        const std::string second = runs[1]["run_id"];
        const std::string state = wait_done(cli, second);
        c.expect(state == "done" || state == "failed", "second run left " + state);
      }
      adjudicate_some(cli, 20, "b");
      gold = get_text(cli, "/api/runs/" + run_id + "/gold");
      server.kill();
    }
    {
      ServerProcess server(data_dir, corpus_dir);
      httplib::Client cli("127.0.0.1", server.port);
      c.expect(get_text(cli, "/api/runs/" + run_id + "/gold") == gold, "gold changed after second restart");
      server.kill();
    }
  } catch (const std::exception& e) {
    c.expect(false, e.what());
  }
  c.note(fmt("3 server lifetimes, %.0f gold bytes", static_cast<double>(gold.size())));
  fs::remove_all(root);
  return c.done();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle-extraction", oracle_extraction},
      {"noisy-calibration", noisy_calibration},
      {"baseline-inferiority", baseline_inferiority},
      {"metric-oracle", metric_oracle},
      {"auc-oracle", auc_oracle},
      {"gradient-check", gradient_check},
      {"screening-lift", screening_lift},
      {"prompt-goldens", prompt_goldens},
      {"matching-correctness", matching_correctness},
      {"crash-safety", crash_safety},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << (o.detail.empty() ? "" : ": " + o.detail) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
