// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include "symscreen/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "symscreen/error.hpp"
#include "symscreen/eval.hpp"
#include "symscreen/json_io.hpp"
#include "symscreen/matching.hpp"
#include "symscreen/phq.hpp"
#include "symscreen/screen.hpp"
#include "symscreen/service.hpp"
#include "symscreen/synth.hpp"

namespace symscreen::cli {

using jsonl::Json;
namespace fs = std::filesystem;

namespace {

struct Defaults {
  std::size_t k = 5;
  std::uint64_t seed = 7;
  std::size_t char_limit = 6000;
  std::size_t parallelism = 1;
};

struct Config {
  Json raw = Json::object();
  std::vector<BackendConfig> backends = default_backends();
  Defaults defaults;
};

Config load_config(const std::string& flag_path) {
  std::string path = flag_path;
  if (path.empty()) {
    if (const char* env = std::getenv("SYMSCREEN_CONFIG")) path = env;
  }
  Config c;
  if (path.empty()) return c;
  auto in = jsonl::open_input(path);
  try {
    c.raw = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (c.raw.contains("backends")) {
    c.backends.clear();
    for (const auto& b : c.raw["backends"]) c.backends.push_back(backend_from_json(b));
  }
  if (c.raw.contains("defaults")) {
    const Json& d = c.raw["defaults"];
    if (d.contains("k")) c.defaults.k = d["k"].get<std::size_t>();
    if (d.contains("seed")) c.defaults.seed = d["seed"].get<std::uint64_t>();
    if (d.contains("char_limit")) c.defaults.char_limit = d["char_limit"].get<std::size_t>();
    if (d.contains("parallelism")) c.defaults.parallelism = d["parallelism"].get<std::size_t>();
  }
  return c;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = text::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::vector<Detection> load_detections(const std::string& path) {
  auto in = jsonl::open_input(path);
  return read_detections(in, fs::path(path).filename().string());
}

std::vector<GoldLabel> load_gold(const std::string& path) {
  auto in = jsonl::open_input(path);
  return read_gold(in, fs::path(path).filename().string());
}

void add_format(CLI::App* sub, std::string& format, std::vector<std::string> choices = {"table", "jsonl"}) {
  sub->add_option("--format", format, "Output format")->check(CLI::IsMember(choices))->capture_default_str();
}

// --- subcommands ---------------------------------------------------------------

struct SynthArgs {
  std::optional<std::uint64_t> seed;
  std::size_t cases = 50;
  std::size_t controls = 50;
  std::size_t min_notes = 3;
  std::size_t max_notes = 10;
  std::optional<double> rate;
  double paraphrase_rate = 0.3;
  double negation_rate = 0.1;
  double distractor_rate = 0.3;
  double phq_rate = 0.3;
  std::string out_dir;
  std::string format = "table";
};

int run_synth(const SynthArgs& a, const Config& cfg, std::ostream& out) {
  SynthSpec spec = a.rate ? SynthSpec::uniform(*a.rate) : SynthSpec::reference_defaults();
  spec.seed = a.seed.value_or(cfg.defaults.seed);
  spec.n_cases = a.cases;
  spec.n_controls = a.controls;
  spec.min_notes = a.min_notes;
  spec.max_notes = a.max_notes;
  spec.paraphrase_rate = a.paraphrase_rate;
  spec.negation_rate = a.negation_rate;
  spec.distractor_rate = a.distractor_rate;
  spec.phq_rate = a.phq_rate;
  const SynthResult r = synthesize(spec);
  write_corpus(r.corpus, a.out_dir);
  std::size_t positives = 0;
  for (const auto& g : r.corpus.gold()) positives += g.present ? 1 : 0;
  if (a.format == "jsonl") {
    out << Json{{"out", a.out_dir},
                {"seed", spec.seed},
                {"patients", r.corpus.patients().size()},
                {"notes", r.corpus.notes().size()},
                {"gold_labels", r.corpus.gold().size()},
                {"gold_positive", positives},
                {"plants", r.plants.size()}}
               .dump()
        << "\n";
  } else {
    out << "Wrote " << r.corpus.patients().size() << " patients, " << r.corpus.notes().size() << " notes, "
        << r.corpus.gold().size() << " gold labels (" << positives << " positive) to " << a.out_dir << "\n";
  }
  return kExitOk;
}

struct IngestArgs {
  std::string corpus;
  std::string name;
  std::string data_dir = "symscreen-data";
  std::string format = "table";
};

int run_ingest(const IngestArgs& a, std::ostream& out) {
  const Corpus c = ingest(a.corpus);
  std::string dest;
  if (!a.name.empty()) {
    if (a.name.find('/') != std::string::npos || a.name == "." || a.name == "..") {
      throw ValidationError("invalid corpus name '" + a.name + "'");
    }
    dest = (fs::path(a.data_dir) / "corpora" / a.name).string();
    write_corpus(c, dest);
  }
  if (a.format == "jsonl") {
    Json j{{"patients", c.patients().size()}, {"notes", c.notes().size()}, {"gold_labels", c.gold().size()}};
    if (!dest.empty()) j["stored"] = dest;
    out << j.dump() << "\n";
  } else {
    out << "Corpus OK: " << c.patients().size() << " patients, " << c.notes().size() << " notes, "
        << c.gold().size() << " gold labels\n";
    if (!dest.empty()) out << "Stored as " << dest << "\n";
  }
  return kExitOk;
}

struct StatsArgs {
  std::string corpus;
  std::string denominator = "with_phq";
  bool assume_full = true;
  bool match = false;
  std::string format = "table";
};

Json stats_row_json(const CohortStatsRow& r, bool average) {
  Json j;
  if (average) {
    j["age_bin"] = "average";
  } else {
    j["age_bin"] = r.age_bin;
  }
  j["n_patients"] = r.n_patients;
  j["n_visits_with_phq"] = r.n_visits_with_phq;
  j["n_patients_with_phq"] = r.n_patients_with_phq;
  j["pct_at_least_one_phq"] = r.pct_at_least_one_phq;
  j["pct_at_least_one_phq9"] = r.pct_at_least_one_phq9;
  j["pct_at_least_one_phq2"] = r.pct_at_least_one_phq2;
  j["pct_at_least_two_phq"] = r.pct_at_least_two_phq;
  j["pct_at_least_two_phq9"] = r.pct_at_least_two_phq9;
  j["pct_at_least_two_phq2"] = r.pct_at_least_two_phq2;
  return j;
}

int run_stats(const StatsArgs& a, std::ostream& out) {
  const Corpus c = ingest(a.corpus);
  const auto denom = a.denominator == "cohort" ? PhqDenominator::cohort : PhqDenominator::patients_with_phq;
  const CohortStats stats = cohort_stats(c, denom, a.assume_full);
  std::optional<MatchResult> matched;
  if (a.match) matched = match_controls(c);
  if (a.format == "jsonl") {
    for (const auto& r : stats.rows) out << stats_row_json(r, false).dump() << "\n";
    if (stats.average) out << stats_row_json(*stats.average, true).dump() << "\n";
    if (matched) {
      for (const auto& [case_id, control_id] : matched->pairs) {
        out << Json{{"case_id", case_id}, {"control_id", control_id}}.dump() << "\n";
      }
      for (const auto& id : matched->unmatched) out << Json{{"case_id", id}, {"control_id", nullptr}}.dump() << "\n";
    }
  } else {
    out << render_cohort_stats(stats);
    if (matched) {
      out << "\nMatched pairs: " << matched->pairs.size() << "; unmatched cases: " << matched->unmatched.size()
          << "\n";
      for (const auto& [case_id, control_id] : matched->pairs) out << "  " << case_id << " -> " << control_id << "\n";
    }
  }
  return kExitOk;
}

struct ExtractArgs {
  std::string backend;
  std::string corpus;
  std::string out_path;
  std::optional<std::size_t> parallelism;
  std::optional<std::size_t> char_limit;
  std::string categories;
  std::string format = "table";
};

int run_extract(const ExtractArgs& a, const Config& cfg, std::ostream& out, std::ostream& err) {
  const BackendConfig* found = nullptr;
  for (const auto& b : cfg.backends) {
    if (b.backend_id == a.backend) found = &b;
  }
  if (!found) {
    std::string known;
    for (const auto& b : cfg.backends) known += (known.empty() ? "" : ", ") + b.backend_id;
    throw ValidationError("unknown backend '" + a.backend + "' (available: " + known + ")");
  }
  BackendConfig bc = *found;
  bc.parallelism = a.parallelism.value_or(std::max(bc.parallelism, cfg.defaults.parallelism));
  bc.char_limit = a.char_limit.value_or(bc.char_limit);
  bc.validate();

  const Corpus c = ingest(a.corpus);
  const Taxonomy& tax = Taxonomy::canonical();
  std::vector<SymptomCategory> cats;
  if (a.categories.empty()) {
    cats = tax.categories();
  } else {
    for (const auto& id : split_list(a.categories)) cats.push_back(tax.at(id));
  }
  const auto backend = make_backend(bc, c, tax);
  const auto dets = run_extraction(*backend, c, cats, RunOptions{bc.parallelism, nullptr});
  {
    auto o = jsonl::open_output(a.out_path);
    o << detections_to_jsonl(dets);
    if (!o) throw RuntimeFailure("cannot write '" + a.out_path + "'");
  }

  std::map<std::string, std::size_t> by_status;
  std::size_t positives = 0;
  for (const auto& d : dets) {
    ++by_status[to_string(d.status)];
    positives += d.present ? 1 : 0;
  }
  const bool deterministic = bc.kind != BackendKind::chat && bc.kind != BackendKind::entailment;
  if (a.format == "jsonl") {
    Json j{{"backend_id", bc.backend_id}, {"kind", to_string(bc.kind)}, {"deterministic", deterministic},
           {"pairs", dets.size()},        {"positive", positives},        {"out", a.out_path}};
    j["status"] = by_status;
    out << j.dump() << "\n";
  } else {
    out << "Backend " << bc.backend_id << " (" << to_string(bc.kind) << (deterministic ? "" : ", nondeterministic")
        << "): " << dets.size() << " pairs, " << positives << " positive -> " << a.out_path << "\n";
    for (const auto& [status, n] : by_status) out << "  " << status << ": " << n << "\n";
  }
  const std::size_t failed = by_status.contains("backend_error") ? by_status["backend_error"] : 0;
  if (failed > 0) {
    err << "error: " << failed << " of " << dets.size() << " pairs failed at the backend\n";
    return kExitRuntime;
  }
  return kExitOk;
}

struct EvalArgs {
  std::string gold;
  std::string detections;
  bool na_as_zero = false;
  std::string format = "table";
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  const auto gold = load_gold(a.gold);
  const auto dets = load_detections(a.detections);
  const EvalReport report = score(gold, dets, Taxonomy::canonical(), a.na_as_zero ? NaPolicy::as_zero : NaPolicy::skip);
  out << render_report(report, parse_report_format(a.format));
  return kExitOk;
}

struct ScreenArgs {
  std::string detections;
  std::string corpus;
  std::string models = "logreg,tree,forest,svm,mlp,bow";
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> seed;
  std::optional<int> window_days;
  std::string out_path;
  std::string format = "table";
};

int run_screen(const ScreenArgs& a, const Config& cfg, std::ostream& out, std::ostream& err) {
  const std::size_t k = a.k.value_or(cfg.defaults.k);
  const std::uint64_t seed = a.seed.value_or(cfg.defaults.seed);
  Hyperparams hyper;
  if (cfg.raw.contains("hyperparams")) hyper = hyperparams_from_json(cfg.raw["hyperparams"]);

  Corpus c = ingest(a.corpus);
  if (a.window_days) {
    if (*a.window_days < 0) throw ValidationError("--window-days must be non-negative");
    c = filter_phq_window(c, *a.window_days);
  }
  const auto dets = load_detections(a.detections);
  const VectorizeResult vr = vectorize(dets, c);
  for (const auto& id : vr.skipped) err << "warning: patient " << id << " has no notes; skipped\n";
  const Labels y = case_labels(vr.vectors, c);
  const Matrix X = feature_matrix(vr.vectors);
  std::vector<std::string> ids;
  for (const auto& v : vr.vectors) ids.push_back(v.patient_id);

  std::vector<ModelSpec> specs;
  bool with_bow = false;
  for (const auto& name : split_list(a.models)) {
    const ModelKind kind = parse_model_kind(name);
    if (kind == ModelKind::bow_logreg_baseline) {
      with_bow = true;
    } else {
      specs.push_back({kind, hyper, seed});
    }
  }
  std::vector<BenchResult> results = run_bench(specs, X, y, ids, k, seed);
  if (with_bow) results.push_back(bow_baseline(c, ids, y, k, seed, hyper));
  for (const auto& r : results) {
    for (const auto& w : r.warnings) err << "warning: " << to_string(r.kind) << " " << w << "\n";
  }

  if (!a.out_path.empty()) {
    Json doc;
    doc["k"] = k;
    doc["seed"] = seed;
    doc["n_patients"] = ids.size();
    doc["skipped"] = vr.skipped;
    doc["hyperparams"] = to_json(hyper);
    doc["results"] = bench_to_json(results);
    auto o = jsonl::open_output(a.out_path);
    o << doc.dump(2) << "\n";
  }
  if (a.format == "jsonl") {
    for (const auto& r : results) {
      Json j = to_json(r);
      j.erase("folds");
      out << j.dump() << "\n";
    }
  } else {
    out << render_bench(results);
  }
  return kExitOk;
}

struct ServeArgs {
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<std::string> data_dir;
  std::optional<std::string> ui_dir;
  std::optional<std::string> token;
  std::vector<std::string> corpora;
  std::string format = "table";
};

int run_serve(const ServeArgs& a, const Config& cfg, std::ostream& out) {
  ServiceConfig sc = service_config_from_json(cfg.raw);
  if (!cfg.raw.contains("backends")) sc.backends = cfg.backends;
  if (a.host) sc.host = *a.host;
  if (a.port) sc.port = *a.port;
  if (a.data_dir) sc.data_dir = *a.data_dir;
  if (a.ui_dir) sc.ui_dir = *a.ui_dir;
  if (a.token) sc.token = *a.token;
  for (const auto& spec : a.corpora) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--corpus expects name=path, got '" + spec + "'");
    sc.corpora[spec.substr(0, eq)] = spec.substr(eq + 1);
  }

  // Route SIGINT/SIGTERM to a waiter thread so the server shuts down cleanly.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(sc);
  HttpServer server(service);
  std::atomic<bool> finished{false};
  std::thread waiter([&] {
    const timespec tick{0, 200'000'000};
    while (!finished.load()) {
      if (sigtimedwait(&signals, nullptr, &tick) > 0) {
        server.stop();
        return;
      }
    }
  });
  try {
    server.run(sc.host, sc.port, [&](int port) {
      if (a.format == "jsonl") {
        out << Json{{"host", sc.host}, {"port", port}}.dump() << std::endl;
      } else {
        out << "listening on " << sc.host << ":" << port << std::endl;
      }
    });
  } catch (...) {
    finished = true;
    waiter.join();
    throw;
  }
  finished = true;
  waiter.join();
  return kExitOk;
}

int run_taxonomy_show(const std::string& format, std::ostream& out) {
  const Taxonomy& tax = Taxonomy::canonical();
  if (format == "jsonl") {
    for (const auto& c : tax.categories()) {
      out << Json{{"id", c.id},
                  {"display_name", c.display_name},
                  {"phq_question", to_string(c.phq_question)},
                  {"direction", to_string(c.direction)},
                  {"bdi_items", c.bdi_items},
                  {"chat_query", c.chat_query},
                  {"hypothesis", c.hypothesis},
                  {"keywords", c.keywords}}
                 .dump()
          << "\n";
    }
    return kExitOk;
  }
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %-24s %-10s %-10s %s\n", "Question", "Category", "Direction", "BDI", "Keywords");
  out << buf;
  for (const auto& c : tax.categories()) {
    std::string bdi;
    for (int i : c.bdi_items) bdi += (bdi.empty() ? "" : ",") + std::to_string(i);
    std::string kw;
    for (const auto& set : c.keywords) {
      std::string joined;
      for (const auto& w : set) joined += (joined.empty() ? "" : " ") + w;
      kw += (kw.empty() ? "" : "; ") + joined;
    }
    std::snprintf(buf, sizeof buf, "%-8s %-24s %-10s %-10s %s\n", to_string(c.phq_question).c_str(),
                  c.display_name.c_str(), to_string(c.direction).c_str(), bdi.empty() ? "-" : bdi.c_str(),
                  kw.c_str());
    out << buf;
  }
  return kExitOk;
}

int run_compact(const std::string& data_dir, const std::string& format, std::ostream& out) {
  if (!fs::is_directory(data_dir)) throw NotFoundError("data directory '" + data_dir + "' does not exist");
  compact(data_dir);
  if (format == "jsonl") {
    out << Json{{"compacted", data_dir}}.dump() << "\n";
  } else {
    out << "Compacted " << data_dir << "\n";
  }
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Depressive-symptom extraction, evaluation and screening toolkit", "symscreen"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file (default: $SYMSCREEN_CONFIG)");

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus with gold labels");
  s_synth->add_option("--seed", synth.seed, "Seed (default 7)");
  s_synth->add_option("--cases", synth.cases)->capture_default_str();
  s_synth->add_option("--controls", synth.controls)->capture_default_str();
  s_synth->add_option("--min-notes", synth.min_notes)->capture_default_str();
  s_synth->add_option("--max-notes", synth.max_notes)->capture_default_str();
  s_synth->add_option("--rate", synth.rate, "Uniform planting rate (default: per-category case/control reference rates)");
  s_synth->add_option("--paraphrase-rate", synth.paraphrase_rate)->capture_default_str();
  s_synth->add_option("--negation-rate", synth.negation_rate)->capture_default_str();
  s_synth->add_option("--distractor-rate", synth.distractor_rate)->capture_default_str();
  s_synth->add_option("--phq-rate", synth.phq_rate)->capture_default_str();
  s_synth->add_option("--out", synth.out_dir, "Output directory")->required();
  add_format(s_synth, synth.format);

  IngestArgs ing;
  auto* s_ingest = app.add_subcommand("ingest", "Validate a corpus directory and optionally store it for the service");
  s_ingest->add_option("--corpus", ing.corpus, "Directory with patients.jsonl, notes.jsonl [, gold.jsonl]")
      ->required();
  s_ingest->add_option("--name", ing.name, "Store under <data-dir>/corpora/<name>");
  s_ingest->add_option("--data-dir", ing.data_dir)->capture_default_str();
  add_format(s_ingest, ing.format);

  StatsArgs stats;
  auto* s_stats = app.add_subcommand("stats", "PHQ cohort statistics per age");
  s_stats->add_option("--corpus", stats.corpus)->required();
  s_stats->add_option("--denominator", stats.denominator, "Percentages relative to patients with PHQ or the cohort")
      ->check(CLI::IsMember({"with_phq", "cohort"}))
      ->capture_default_str();
  s_stats->add_option("--assume-full", stats.assume_full, "Score lines without Items Answered count as PHQ-9")
      ->capture_default_str();
  s_stats->add_flag("--match", stats.match, "Also match controls to cases");
  add_format(s_stats, stats.format);

  ExtractArgs ext;
  auto* s_extract = app.add_subcommand("extract", "Run a detection backend over a corpus");
  s_extract->add_option("--backend", ext.backend)->required();
  s_extract->add_option("--corpus", ext.corpus)->required();
  s_extract->add_option("--out", ext.out_path, "Detections JSONL output")->required();
  s_extract->add_option("--parallelism", ext.parallelism);
  s_extract->add_option("--char-limit", ext.char_limit);
  s_extract->add_option("--categories", ext.categories, "Comma-separated category ids (default: all)");
  add_format(s_extract, ext.format);

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "Score detections against gold labels");
  s_eval->add_option("--gold", ev.gold)->required();
  s_eval->add_option("--detections", ev.detections)->required();
  s_eval->add_flag("--na-as-zero", ev.na_as_zero, "Count N/A cells as 0 in averages");
  add_format(s_eval, ev.format, {"table", "jsonl", "markdown"});

  ScreenArgs scr;
  auto* s_screen = app.add_subcommand("screen", "Cross-validate case/control classifiers on symptom vectors");
  s_screen->add_option("--detections", scr.detections)->required();
  s_screen->add_option("--corpus", scr.corpus)->required();
  s_screen->add_option("--models", scr.models)->capture_default_str();
  s_screen->add_option("--k", scr.k, "Folds (default 5)");
  s_screen->add_option("--seed", scr.seed, "Seed (default 7)");
  s_screen->add_option("--window-days", scr.window_days, "Keep notes within this many days of a PHQ");
  s_screen->add_option("--out", scr.out_path, "Write bench results with per-fold detail");
  add_format(s_screen, scr.format);

  ServeArgs srv;
  auto* s_serve = app.add_subcommand("serve", "Run the HTTP adjudication service");
  s_serve->add_option("--host", srv.host);
  s_serve->add_option("--port", srv.port, "0 picks a free port");
  s_serve->add_option("--data-dir", srv.data_dir);
  s_serve->add_option("--ui-dir", srv.ui_dir);
  s_serve->add_option("--token", srv.token, "Shared bearer token for /api");
  s_serve->add_option("--corpus", srv.corpora, "Corpus reference as name=path (repeatable)");
  add_format(s_serve, srv.format);

  std::string tax_format = "table";
  auto* s_tax = app.add_subcommand("taxonomy", "Symptom taxonomy");
  s_tax->require_subcommand(1);
  auto* s_tax_show = s_tax->add_subcommand("show", "Print the canonical taxonomy");
  add_format(s_tax_show, tax_format);

  std::string compact_dir;
  std::string compact_format = "table";
  auto* s_compact = app.add_subcommand("compact", "Compact the service logs");
  s_compact->add_option("--data-dir", compact_dir)->required();
  add_format(s_compact, compact_format);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("symscreen");

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    err << app.help();
    return kExitValidation;
  }

  try {
    const Config cfg = load_config(config_path);
    if (s_synth->parsed()) return run_synth(synth, cfg, out);
    if (s_ingest->parsed()) return run_ingest(ing, out);
    if (s_stats->parsed()) return run_stats(stats, out);
    if (s_extract->parsed()) return run_extract(ext, cfg, out, err);
    if (s_eval->parsed()) return run_eval(ev, out);
    if (s_screen->parsed()) return run_screen(scr, cfg, out, err);
    if (s_serve->parsed()) return run_serve(srv, cfg, out);
    if (s_tax_show->parsed()) return run_taxonomy_show(tax_format, out);
    if (s_compact->parsed()) return run_compact(compact_dir, compact_format, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NotFoundError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConflictError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace symscreen::cli
