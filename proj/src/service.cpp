// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include "symscreen/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "httplib.h"
#include "symscreen/error.hpp"
#include "symscreen/json_io.hpp"
#include "symscreen/rng.hpp"

namespace symscreen {

using jsonl::Json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration and records

void ServiceConfig::validate() const {
  std::set<std::string> ids;
  for (const auto& b : backends) {
    b.validate();
    if (!ids.insert(b.backend_id).second) throw ValidationError("duplicate backend_id '" + b.backend_id + "'");
  }
  if (port < 0 || port > 65535) throw ValidationError("port out of range");
}

ServiceConfig service_config_from_json(const Json& j) {
  ServiceConfig c;
  if (j.contains("host")) c.host = j.at("host").get<std::string>();
  if (j.contains("port")) c.port = j.at("port").get<int>();
  if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
  if (j.contains("backends")) {
    c.backends.clear();
    for (const auto& b : j.at("backends")) c.backends.push_back(backend_from_json(b));
  }
  if (j.contains("corpora")) {
    for (const auto& [name, path] : j.at("corpora").items()) c.corpora[name] = path.get<std::string>();
  }
  if (j.contains("ui_dir")) c.ui_dir = j.at("ui_dir").get<std::string>();
  if (j.contains("token")) c.token = j.at("token").get<std::string>();
  c.validate();
  return c;
}

std::string to_string(RunState s) {
  switch (s) {
    case RunState::pending: return "pending";
    case RunState::running: return "running";
    case RunState::done: return "done";
    case RunState::failed: return "failed";
  }
  return "pending";
}

RunState parse_run_state(std::string_view s) {
  if (s == "pending") return RunState::pending;
  if (s == "running") return RunState::running;
  if (s == "done") return RunState::done;
  if (s == "failed") return RunState::failed;
  throw ValidationError("invalid run state '" + std::string(s) + "'");
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::accept: return "accept";
    case Verdict::reject: return "reject";
    case Verdict::modify: return "modify";
  }
  return "accept";
}

Verdict parse_verdict(std::string_view s) {
  if (s == "accept") return Verdict::accept;
  if (s == "reject") return Verdict::reject;
  if (s == "modify") return Verdict::modify;
  throw ValidationError("invalid verdict '" + std::string(s) + "'");
}

namespace {

Json spans_json(const std::vector<Span>& spans) {
  Json a = Json::array();
  for (const auto& s : spans) a.push_back(Json{{"start", s.start}, {"end", s.end}});
  return a;
}

std::vector<Span> spans_from_json(const Json& a) {
  if (!a.is_array()) throw ValidationError("evidence must be an array of {start, end}");
  std::vector<Span> out;
  for (const auto& e : a) out.push_back({e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>()});
  return out;
}

std::string now_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string sequence_id(char prefix, std::size_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%c%06zu", prefix, n);
  return buf;
}

std::size_t sequence_number(const std::string& id) {
  if (id.size() < 2) return 0;
  try {
    return static_cast<std::size_t>(std::stoull(id.substr(1)));
  } catch (const std::exception&) {
    return 0;
  }
}

void fsync_path(const fs::path& p, int flags) {
  const int fd = ::open(p.c_str(), flags);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

void write_all(int fd, const std::string& data, const fs::path& path) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw RuntimeFailure("write to '" + path.string() + "' failed");
    }
    off += static_cast<std::size_t>(n);
  }
}

// Write to a temporary sibling, fsync, then rename into place.
void write_file_atomic(const fs::path& path, const std::string& data) {
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw RuntimeFailure("cannot write '" + tmp.string() + "'");
  try {
    write_all(fd, data, tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, path);
  fsync_path(path.parent_path(), O_RDONLY | O_DIRECTORY);
}

// Reads every complete record of an append-only log. An unparseable or
// unterminated final line is a torn write: it is dropped and cut from the file.
std::vector<Json> read_log(const fs::path& path) {
  std::vector<Json> out;
  if (!fs::exists(path)) return out;
  std::string data;
  {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    data = ss.str();
  }
  std::size_t pos = 0;
  std::size_t good_end = 0;
  std::size_t line_no = 0;
  while (pos < data.size()) {
    const std::size_t nl = data.find('\n', pos);
    ++line_no;
    const bool last = nl == std::string::npos || nl + 1 >= data.size();
    const std::string line = data.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    if (nl == std::string::npos) break;
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      Json j;
      try {
        j = Json::parse(line);
        if (!j.is_object()) throw ValidationError("expected a JSON object");
      } catch (const std::exception& e) {
        if (last) break;
        throw ValidationError(path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      out.push_back(std::move(j));
    }
    pos = nl + 1;
    good_end = pos;
  }
  if (good_end < data.size()) fs::resize_file(path, good_end);
  return out;
}

std::string fingerprint(const AdjudicationRequest& r) {
  Json j;
  j["note_id"] = r.note_id;
  j["category_id"] = r.category_id;
  j["verdict"] = to_string(r.verdict);
  j["corrected_evidence"] = r.corrected_evidence ? spans_json(*r.corrected_evidence) : Json(nullptr);
  j["reviewer"] = r.reviewer;
  j["run_id"] = r.run_id ? Json(*r.run_id) : Json(nullptr);
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

}  // namespace

Json to_json(const Run& r) {
  Json j;
  j["run_id"] = r.run_id;
  j["backend_id"] = r.backend_id;
  j["corpus_ref"] = r.corpus_ref;
  j["categories"] = r.categories;
  j["state"] = to_string(r.state);
  j["created_at"] = r.created_at;
  j["finished_at"] = r.finished_at ? Json(*r.finished_at) : Json(nullptr);
  j["progress"] = Json{{"done", r.done_pairs}, {"total", r.total_pairs}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

Run run_from_json(const Json& j) {
  Run r;
  r.run_id = j.at("run_id").get<std::string>();
  r.backend_id = j.at("backend_id").get<std::string>();
  r.corpus_ref = j.at("corpus_ref").get<std::string>();
  r.categories = j.at("categories").get<std::vector<std::string>>();
  r.state = parse_run_state(j.at("state").get<std::string>());
  r.created_at = j.at("created_at").get<std::string>();
  if (!j.at("finished_at").is_null()) r.finished_at = j.at("finished_at").get<std::string>();
  r.done_pairs = j.at("progress").at("done").get<std::size_t>();
  r.total_pairs = j.at("progress").at("total").get<std::size_t>();
  if (j.contains("error")) r.error = j.at("error").get<std::string>();
  return r;
}

AdjudicationRequest adjudication_request_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("adjudication must be a JSON object");
  AdjudicationRequest r;
  try {
    r.note_id = j.at("note_id").get<std::string>();
    r.category_id = j.at("category_id").get<std::string>();
    r.verdict = parse_verdict(j.at("verdict").get<std::string>());
    if (j.contains("corrected_evidence") && !j["corrected_evidence"].is_null()) {
      r.corrected_evidence = spans_from_json(j["corrected_evidence"]);
    }
    r.reviewer = j.at("reviewer").get<std::string>();
    if (j.contains("run_id") && !j["run_id"].is_null()) r.run_id = j["run_id"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid adjudication: ") + e.what());
  }
  return r;
}

Json to_json(const Adjudication& a) {
  Json j;
  j["adjudication_id"] = a.adjudication_id;
  j["note_id"] = a.note_id;
  j["category_id"] = a.category_id;
  j["verdict"] = to_string(a.verdict);
  j["corrected_evidence"] = a.corrected_evidence ? spans_json(*a.corrected_evidence) : Json(nullptr);
  j["reviewer"] = a.reviewer;
  j["timestamp"] = a.timestamp;
  j["run_id"] = a.run_id;
  j["gold_present"] = a.gold_present;
  j["gold_evidence"] = spans_json(a.gold_evidence);
  j["idempotency_key"] = a.idempotency_key ? Json(*a.idempotency_key) : Json(nullptr);
  return j;
}

Adjudication adjudication_from_json(const Json& j) {
  Adjudication a;
  a.adjudication_id = j.at("adjudication_id").get<std::string>();
  a.note_id = j.at("note_id").get<std::string>();
  a.category_id = j.at("category_id").get<std::string>();
  a.verdict = parse_verdict(j.at("verdict").get<std::string>());
  if (!j.at("corrected_evidence").is_null()) a.corrected_evidence = spans_from_json(j["corrected_evidence"]);
  a.reviewer = j.at("reviewer").get<std::string>();
  a.timestamp = j.at("timestamp").get<std::string>();
  a.run_id = j.at("run_id").get<std::string>();
  a.gold_present = j.at("gold_present").get<bool>();
  a.gold_evidence = spans_from_json(j.at("gold_evidence"));
  if (!j.at("idempotency_key").is_null()) a.idempotency_key = j["idempotency_key"].get<std::string>();
  return a;
}

Json to_json(const ReviewItem& item, const Taxonomy& taxonomy) {
  Json j;
  j["detection"] = to_json(item.detection);
  j["note_text"] = item.note_text;
  Json highlights = Json::array();
  const auto* cat = taxonomy.find(item.detection.category_id);
  for (const auto& e : item.detection.evidence) {
    if (!e.start || !e.end) continue;
    highlights.push_back(Json{{"start", *e.start},
                              {"end", *e.end},
                              {"category_id", item.detection.category_id},
                              {"label", cat ? cat->display_name : item.detection.category_id}});
  }
  j["highlights"] = std::move(highlights);
  j["adjudication"] = item.adjudication ? to_json(*item.adjudication) : Json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Service

namespace {

constexpr const char* kRunsLog = "runs.log";
constexpr const char* kAdjudicationsLog = "adjudications.log";

}  // namespace

Service::Service(ServiceConfig config, const Taxonomy& taxonomy)
    : config_(std::move(config)), taxonomy_(taxonomy) {
  config_.validate();
  fs::create_directories(config_.data_dir / "detections");
  replay();
  worker_ = std::jthread([this](std::stop_token st) { worker_loop(st); });
}

Service::~Service() {
  worker_.request_stop();
  queue_cv_.notify_all();
}

void Service::append(const fs::path& log, const Json& record) {
  const std::string line = record.dump() + "\n";
  const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw RuntimeFailure("cannot open '" + log.string() + "'");
  try {
    write_all(fd, line, log);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::fsync(fd);
  ::close(fd);
}

void Service::put_run(const Run& run) {
  if (!runs_.contains(run.run_id)) run_order_.push_back(run.run_id);
  runs_[run.run_id] = run;
  next_run_ = std::max(next_run_, sequence_number(run.run_id) + 1);
}

void Service::add_adjudication(Adjudication a, std::optional<std::string> fp) {
  next_adjudication_ = std::max(next_adjudication_, sequence_number(a.adjudication_id) + 1);
  const std::size_t idx = adjudications_.size();
  by_pair_[{a.note_id, a.category_id}].push_back(idx);
  if (a.idempotency_key) {
    by_key_[*a.idempotency_key] = idx;
    if (fp) key_fingerprints_[*a.idempotency_key] = *fp;
  }
  adjudications_.push_back(std::move(a));
}

void Service::replay() {
  for (const auto& j : read_log(config_.data_dir / kRunsLog)) put_run(run_from_json(j));
  for (const auto& j : read_log(config_.data_dir / kAdjudicationsLog)) {
    std::optional<std::string> fp;
    if (j.contains("fingerprint")) fp = j["fingerprint"].get<std::string>();
    add_adjudication(adjudication_from_json(j.at("adjudication")), fp);
  }
  for (const auto& id : run_order_) {
    Run& run = runs_[id];
    if (run.state == RunState::running) {
      run.state = RunState::failed;
      run.error = "interrupted by service restart";
      run.finished_at = now_iso();
      append(config_.data_dir / kRunsLog, to_json(run));
    } else if (run.state == RunState::pending) {
      queue_.push_back(id);
    } else if (run.state == RunState::done) {
      const fs::path path = config_.data_dir / "detections" / (id + ".jsonl");
      if (!fs::exists(path)) {
        run.state = RunState::failed;
        run.error = "detections file missing";
        append(config_.data_dir / kRunsLog, to_json(run));
        continue;
      }
      auto in = jsonl::open_input(path.string());
      detections_[id] = read_detections(in, path.filename().string());
    }
  }
}

const BackendConfig* Service::find_backend(const std::string& id) const {
  for (const auto& b : config_.backends) {
    if (b.backend_id == id) return &b;
  }
  return nullptr;
}

std::shared_ptr<const Corpus> Service::corpus(const std::string& corpus_ref) const {
  std::lock_guard lock(corpora_mutex_);
  if (const auto it = corpora_.find(corpus_ref); it != corpora_.end()) return it->second;
  fs::path dir;
  if (const auto it = config_.corpora.find(corpus_ref); it != config_.corpora.end()) {
    dir = it->second;
  } else if (!corpus_ref.empty() && corpus_ref.find('/') == std::string::npos && corpus_ref != "." &&
             corpus_ref != "..") {
    dir = config_.data_dir / "corpora" / corpus_ref;
  }
  if (dir.empty() || !fs::exists(dir / "notes.jsonl")) {
    throw NotFoundError("unknown corpus '" + corpus_ref + "'");
  }
  auto loaded = std::make_shared<const Corpus>(ingest(dir));
  corpora_[corpus_ref] = loaded;
  return loaded;
}

Run Service::start_run(const std::string& backend_id, const std::string& corpus_ref,
                       const std::vector<std::string>& categories) {
  if (!find_backend(backend_id)) throw NotFoundError("unknown backend '" + backend_id + "'");
  const auto c = corpus(corpus_ref);
  std::vector<std::string> cats = categories;
  if (cats.empty()) {
    for (const auto& cat : taxonomy_.categories()) cats.push_back(cat.id);
  }
  for (const auto& id : cats) {
    if (!taxonomy_.find(id)) throw NotFoundError("unknown category '" + id + "'");
  }
  Run run;
  {
    std::unique_lock lock(mutex_);
    run.run_id = sequence_id('R', next_run_);
    run.backend_id = backend_id;
    run.corpus_ref = corpus_ref;
    run.categories = std::move(cats);
    run.created_at = now_iso();
    run.total_pairs = c->notes().size() * run.categories.size();
    append(config_.data_dir / kRunsLog, to_json(run));
    put_run(run);
  }
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(run.run_id);
  }
  queue_cv_.notify_all();
  return run;
}

const Run& Service::run_ref(const std::string& run_id) const {
  const auto it = runs_.find(run_id);
  if (it == runs_.end()) throw NotFoundError("unknown run '" + run_id + "'");
  return it->second;
}

Run Service::get_run(const std::string& run_id) const {
  std::shared_lock lock(mutex_);
  Run r = run_ref(run_id);
  if (r.state == RunState::running) r.done_pairs = std::min(progress_.load(), r.total_pairs);
  return r;
}

std::vector<Run> Service::runs() const {
  std::shared_lock lock(mutex_);
  std::vector<Run> out;
  for (const auto& id : run_order_) out.push_back(runs_.at(id));
  return out;
}

const std::vector<Detection>& Service::done_detections(const std::string& run_id) const {
  const Run& r = run_ref(run_id);
  if (r.state != RunState::done) {
    throw ConflictError("run '" + run_id + "' is " + to_string(r.state) + ", not done");
  }
  return detections_.at(run_id);
}

std::vector<Detection> Service::detections(const std::string& run_id) const {
  std::shared_lock lock(mutex_);
  return done_detections(run_id);
}

const Adjudication* Service::latest_live(const std::string& note_id, const std::string& category_id) const {
  const auto it = by_pair_.find({note_id, category_id});
  if (it == by_pair_.end() || it->second.empty()) return nullptr;
  return &adjudications_[it->second.back()];
}

std::map<std::string, const Adjudication*> Service::live_for_pair(const std::string& note_id,
                                                                 const std::string& category_id) const {
  std::map<std::string, const Adjudication*> out;
  const auto it = by_pair_.find({note_id, category_id});
  if (it == by_pair_.end()) return out;
  for (std::size_t idx : it->second) out[adjudications_[idx].reviewer] = &adjudications_[idx];
  return out;
}

std::vector<ReviewItem> Service::review_queue(const std::string& run_id, const ReviewFilter& filter) const {
  std::shared_lock lock(mutex_);
  const auto& dets = done_detections(run_id);
  const auto c = corpus(run_ref(run_id).corpus_ref);
  std::vector<ReviewItem> out;
  for (const auto& d : dets) {
    if (filter.category && d.category_id != *filter.category) continue;
    if (filter.only_positive && !d.present) continue;
    const Adjudication* live = latest_live(d.note_id, d.category_id);
    if (filter.unreviewed_only && live) continue;
    const Note* note = c->find_note(d.note_id);
    ReviewItem item{d, note ? note->text : std::string(), std::nullopt};
    if (live) item.adjudication = *live;
    out.push_back(std::move(item));
  }
  return out;
}

AdjudicationResult Service::adjudicate(const AdjudicationRequest& request,
                                       const std::optional<std::string>& idempotency_key) {
  if (request.reviewer.empty()) throw ValidationError("reviewer is required");
  if (request.verdict == Verdict::modify && (!request.corrected_evidence || request.corrected_evidence->empty())) {
    throw ValidationError("modify requires corrected_evidence");
  }
  const std::string fp = fingerprint(request);

  std::unique_lock lock(mutex_);
  if (idempotency_key) {
    if (const auto it = by_key_.find(*idempotency_key); it != by_key_.end()) {
      const auto stored = key_fingerprints_.find(*idempotency_key);
      if (stored != key_fingerprints_.end() && stored->second != fp) {
        throw ConflictError("Idempotency-Key '" + *idempotency_key + "' was used for a different request");
      }
      idempotent_replays_.fetch_add(1, std::memory_order_relaxed);
      return {adjudications_[it->second], false};
    }
  }

  const Detection* det = nullptr;
  std::string source_run;
  auto find_in = [&](const std::string& id) -> const Detection* {
    const auto& dets = detections_.at(id);
    const auto it = std::lower_bound(dets.begin(), dets.end(), std::pair(request.note_id, request.category_id),
                                     [](const Detection& d, const std::pair<std::string, std::string>& key) {
                                       return std::tie(d.note_id, d.category_id) < std::tie(key.first, key.second);
                                     });
    if (it == dets.end() || it->note_id != request.note_id || it->category_id != request.category_id) return nullptr;
    return &*it;
  };
  if (request.run_id) {
    done_detections(*request.run_id);
    det = find_in(*request.run_id);
    source_run = *request.run_id;
  } else {
    for (auto it = run_order_.rbegin(); it != run_order_.rend() && !det; ++it) {
      if (runs_.at(*it).state != RunState::done) continue;
      det = find_in(*it);
      source_run = *it;
    }
  }
  if (!det) {
    throw NotFoundError("no detection for (" + request.note_id + ", " + request.category_id + ")");
  }

  Adjudication a;
  a.note_id = request.note_id;
  a.category_id = request.category_id;
  a.verdict = request.verdict;
  a.corrected_evidence = request.corrected_evidence;
  a.reviewer = request.reviewer;
  a.run_id = source_run;
  a.idempotency_key = idempotency_key;
  switch (request.verdict) {
    case Verdict::accept:
      a.gold_present = det->present;
      if (det->present) {
        for (const auto& e : det->evidence) {
          if (e.start && e.end) a.gold_evidence.push_back({*e.start, *e.end});
        }
      }
      break;
    case Verdict::reject:
      a.gold_present = !det->present;
      break;
    case Verdict::modify: {
      const auto c = corpus(runs_.at(source_run).corpus_ref);
      const Note* note = c->find_note(request.note_id);
      const std::size_t size = note ? note->text.size() : 0;
      for (const auto& s : *request.corrected_evidence) {
        if (s.start >= s.end || s.end > size) {
          throw ValidationError("corrected span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                                ") is empty or outside the note");
        }
      }
      a.gold_present = true;
      a.gold_evidence = *request.corrected_evidence;
      break;
    }
  }
  a.adjudication_id = sequence_id('A', next_adjudication_);
  a.timestamp = now_iso();

  Json record;
  record["adjudication"] = to_json(a);
  if (idempotency_key) record["fingerprint"] = fp;
  append(config_.data_dir / kAdjudicationsLog, record);
  add_adjudication(a, idempotency_key ? std::optional(fp) : std::nullopt);
  return {a, true};
}

std::vector<GoldLabel> Service::project_gold(const std::string& run_id, bool merge) const {
  std::shared_lock lock(mutex_);
  const auto& dets = done_detections(run_id);
  std::shared_ptr<const Corpus> c;
  if (merge) c = corpus(run_ref(run_id).corpus_ref);
  std::vector<GoldLabel> out;
  for (const auto& d : dets) {
    if (const Adjudication* a = latest_live(d.note_id, d.category_id)) {
      out.push_back({d.note_id, d.category_id, a->gold_present, a->gold_evidence});
    } else if (merge) {
      if (const GoldLabel* g = c->find_gold(d.note_id, d.category_id)) out.push_back(*g);
    }
  }
  return out;
}

std::vector<GoldConflict> Service::conflicts(const std::string& run_id) const {
  std::shared_lock lock(mutex_);
  std::vector<GoldConflict> out;
  for (const auto& d : done_detections(run_id)) {
    const auto live = live_for_pair(d.note_id, d.category_id);
    if (live.size() < 2) continue;
    std::set<std::pair<bool, std::vector<std::pair<std::size_t, std::size_t>>>> labels;
    for (const auto& [reviewer, a] : live) {
      std::vector<std::pair<std::size_t, std::size_t>> spans;
      for (const auto& s : a->gold_evidence) spans.emplace_back(s.start, s.end);
      labels.insert({a->gold_present, spans});
    }
    if (labels.size() < 2) continue;
    GoldConflict conflict{d.note_id, d.category_id, {}};
    for (const auto& [reviewer, a] : live) conflict.adjudications.push_back(*a);
    out.push_back(std::move(conflict));
  }
  return out;
}

SymptomVector Service::patient_vector(const std::string& patient_id, const std::optional<std::string>& run_id) const {
  std::shared_lock lock(mutex_);
  std::string chosen;
  std::shared_ptr<const Corpus> c;
  if (run_id) {
    done_detections(*run_id);
    c = corpus(run_ref(*run_id).corpus_ref);
    if (!c->find_patient(patient_id)) {
      throw NotFoundError("patient '" + patient_id + "' is not in run '" + *run_id + "'");
    }
    chosen = *run_id;
  } else {
    for (auto it = run_order_.rbegin(); it != run_order_.rend(); ++it) {
      if (runs_.at(*it).state != RunState::done) continue;
      auto candidate = corpus(runs_.at(*it).corpus_ref);
      if (candidate->find_patient(patient_id)) {
        chosen = *it;
        c = std::move(candidate);
        break;
      }
    }
    if (chosen.empty()) throw NotFoundError("no completed run covers patient '" + patient_id + "'");
  }
  const auto rows = c->notes_of(patient_id);
  if (rows.empty()) throw NotFoundError("patient '" + patient_id + "' has no notes");
  std::set<std::string> notes;
  for (std::size_t r : rows) notes.insert(c->notes()[r].note_id);
  std::vector<Detection> subset;
  for (const auto& d : detections_.at(chosen)) {
    if (notes.contains(d.note_id)) subset.push_back(d);
  }
  // Only this patient's notes matter, so vectorize over a one-patient corpus.
  std::vector<Note> own;
  for (std::size_t r : rows) own.push_back(c->notes()[r]);
  const Corpus single({*c->find_patient(patient_id)}, std::move(own), {});
  return vectorize(subset, single, taxonomy_).vectors.at(0);
}

Json Service::metrics() const {
  std::shared_lock lock(mutex_);
  Json states = Json{{"pending", 0}, {"running", 0}, {"done", 0}, {"failed", 0}};
  for (const auto& [id, r] : runs_) states[to_string(r.state)] = states[to_string(r.state)].get<int>() + 1;
  std::size_t n_detections = 0;
  for (const auto& [id, d] : detections_) n_detections += d.size();
  std::size_t live = 0;
  for (const auto& [pair, idxs] : by_pair_) {
    std::set<std::string> reviewers;
    for (std::size_t i : idxs) reviewers.insert(adjudications_[i].reviewer);
    live += reviewers.size();
  }
  Json j;
  j["runs"] = states;
  j["detections"] = n_detections;
  j["adjudications"] = adjudications_.size();
  j["live_adjudications"] = live;
  j["requests"] = requests_.load();
  j["idempotent_replays"] = idempotent_replays_.load();
  return j;
}

bool Service::wait_idle(std::chrono::milliseconds timeout) const {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    {
      std::shared_lock lock(mutex_);
      const bool busy = std::any_of(runs_.begin(), runs_.end(), [](const auto& kv) {
        return kv.second.state == RunState::pending || kv.second.state == RunState::running;
      });
      if (!busy) return true;
    }
    if (std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

void Service::worker_loop(std::stop_token stop) {
  for (;;) {
    std::string id;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, stop, [&] { return !queue_.empty(); });
      if (stop.stop_requested()) return;
      id = queue_.front();
      queue_.pop_front();
    }

    Run run;
    {
      std::unique_lock lock(mutex_);
      run = runs_.at(id);
      if (run.state != RunState::pending) continue;
      run.state = RunState::running;
      progress_ = 0;
      append(config_.data_dir / kRunsLog, to_json(run));
      put_run(run);
    }

    try {
      const BackendConfig* cfg = find_backend(run.backend_id);
      if (!cfg) throw NotFoundError("unknown backend '" + run.backend_id + "'");
      const auto c = corpus(run.corpus_ref);
      std::vector<SymptomCategory> cats;
      for (const auto& cid : run.categories) cats.push_back(taxonomy_.at(cid));
      const auto backend = make_backend(*cfg, *c, taxonomy_);
      auto dets = run_extraction(*backend, *c, cats, RunOptions{cfg->parallelism, &progress_});
      write_file_atomic(config_.data_dir / "detections" / (id + ".jsonl"), detections_to_jsonl(dets));

      std::unique_lock lock(mutex_);
      run.state = RunState::done;
      run.done_pairs = run.total_pairs;
      run.finished_at = now_iso();
      append(config_.data_dir / kRunsLog, to_json(run));
      detections_[id] = std::move(dets);
      put_run(run);
    } catch (const std::exception& e) {
      std::unique_lock lock(mutex_);
      run.state = RunState::failed;
      run.done_pairs = std::min(progress_.load(), run.total_pairs);
      run.error = e.what();
      run.finished_at = now_iso();
      try {
        append(config_.data_dir / kRunsLog, to_json(run));
      } catch (const std::exception&) {
      }
      put_run(run);
    }
  }
}

// ---------------------------------------------------------------------------
// Compaction

void compact(const fs::path& data_dir) {
  const fs::path runs_log = data_dir / kRunsLog;
  const fs::path adj_log = data_dir / kAdjudicationsLog;

  std::map<std::string, Json> last_run;
  std::vector<std::string> order;
  for (const auto& j : read_log(runs_log)) {
    const auto id = j.at("run_id").get<std::string>();
    if (!last_run.contains(id)) order.push_back(id);
    last_run[id] = j;
  }
  std::string runs_out;
  for (const auto& id : order) runs_out += last_run[id].dump() + "\n";

  const auto records = read_log(adj_log);
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> latest;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& a = records[i].at("adjudication");
    latest[{a.at("note_id").get<std::string>(), a.at("category_id").get<std::string>(),
            a.at("reviewer").get<std::string>()}] = i;
  }
  std::string adj_out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& a = records[i].at("adjudication");
    const bool live = latest.at({a.at("note_id").get<std::string>(), a.at("category_id").get<std::string>(),
                                 a.at("reviewer").get<std::string>()}) == i;
    if (live || !a.at("idempotency_key").is_null()) adj_out += records[i].dump() + "\n";
  }

  if (fs::exists(runs_log) || !runs_out.empty()) write_file_atomic(runs_log, runs_out);
  if (fs::exists(adj_log) || !adj_out.empty()) write_file_atomic(adj_log, adj_out);
}

// ---------------------------------------------------------------------------
// HTTP

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  explicit Impl(Service& s) : service(s) {}
};

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ValidationError& e) {
      send_json(res, 400, Json{{"error", e.what()}});
    } catch (const NotFoundError& e) {
      send_json(res, 404, Json{{"error", e.what()}});
    } catch (const ConflictError& e) {
      send_json(res, 409, Json{{"error", e.what()}});
    } catch (const nlohmann::json::exception& e) {
      send_json(res, 400, Json{{"error", std::string("invalid JSON: ") + e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, Json{{"error", e.what()}});
    }
  };
}

bool flag(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return false;
  const std::string v = req.get_param_value(name);
  return v == "1" || v == "true" || v == "yes";
}

}  // namespace

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  Service& svc = service;
  const std::string token = service.config().token;

  srv.set_pre_routing_handler([&svc, token](const httplib::Request& req, httplib::Response& res) {
    svc.count_request();
    if (!token.empty() && req.path.rfind("/api/", 0) == 0 &&
        req.get_header_value("Authorization") != "Bearer " + token) {
      send_json(res, 401, Json{{"error", "missing or invalid bearer token"}});
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  srv.Post("/api/runs", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const Json body = Json::parse(req.body);
             std::vector<std::string> cats;
             if (body.contains("categories")) cats = body["categories"].get<std::vector<std::string>>();
             const Run r = svc.start_run(body.at("backend_id").get<std::string>(),
                                         body.at("corpus_ref").get<std::string>(), cats);
             send_json(res, 201, to_json(r));
           }));
  srv.Get("/api/runs", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            Json out = Json::array();
            for (const auto& r : svc.runs()) out.push_back(to_json(r));
            send_json(res, 200, out);
          }));
  srv.Get(R"(/api/runs/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, to_json(svc.get_run(req.matches[1])));
          }));
  srv.Get(R"(/api/runs/([^/]+)/detections)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            Json out = Json::array();
            for (const auto& d : svc.detections(req.matches[1])) out.push_back(to_json(d));
            send_json(res, 200, out);
          }));
  srv.Get(R"(/api/runs/([^/]+)/review)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            ReviewFilter f;
            if (req.has_param("category") && !req.get_param_value("category").empty()) {
              f.category = req.get_param_value("category");
            }
            f.only_positive = flag(req, "only_positive");
            f.unreviewed_only = flag(req, "unreviewed_only");
            Json out = Json::array();
            for (const auto& item : svc.review_queue(req.matches[1], f)) out.push_back(to_json(item));
            send_json(res, 200, out);
          }));
  srv.Get(R"(/api/runs/([^/]+)/gold)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const auto gold = svc.project_gold(req.matches[1], flag(req, "merge"));
            res.status = 200;
            res.set_content(gold_to_jsonl(gold), "application/x-ndjson");
          }));
  srv.Get(R"(/api/runs/([^/]+)/conflicts)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            Json out = Json::array();
            for (const auto& c : svc.conflicts(req.matches[1])) {
              Json adj = Json::array();
              for (const auto& a : c.adjudications) adj.push_back(to_json(a));
              out.push_back(Json{{"note_id", c.note_id}, {"category_id", c.category_id}, {"adjudications", adj}});
            }
            send_json(res, 200, out);
          }));
  srv.Post("/api/adjudications", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const auto request = adjudication_request_from_json(Json::parse(req.body));
             std::optional<std::string> key;
             if (req.has_header("Idempotency-Key")) key = req.get_header_value("Idempotency-Key");
             const auto result = svc.adjudicate(request, key);
             send_json(res, result.created ? 201 : 200, to_json(result.adjudication));
           }));
  srv.Get(R"(/api/patients/([^/]+)/vector)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            std::optional<std::string> run;
            if (req.has_param("run_id")) run = req.get_param_value("run_id");
            const SymptomVector v = svc.patient_vector(req.matches[1], run);
            Json values;
            const auto& tax = Taxonomy::canonical();
            for (std::size_t i = 0; i < v.values.size() && i < tax.size(); ++i) values[tax[i].id] = v.values[i];
            send_json(res, 200, Json{{"patient_id", v.patient_id}, {"n_notes", v.n_notes}, {"values", values}});
          }));
  srv.Get("/api/metrics", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, svc.metrics());
          }));

  if (!service.config().ui_dir.empty() && fs::is_directory(service.config().ui_dir)) {
    srv.set_mount_point("/", service.config().ui_dir.string());
  }
}

HttpServer::~HttpServer() = default;

void HttpServer::run(const std::string& host, int port, const std::function<void(int)>& on_listening) {
  auto& srv = impl_->server;
  int bound = port;
  if (port == 0) {
    bound = srv.bind_to_any_port(host);
  } else if (!srv.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw RuntimeFailure("cannot listen on " + host + ":" + std::to_string(port));
  if (on_listening) on_listening(bound);
  srv.listen_after_bind();
}

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace symscreen
