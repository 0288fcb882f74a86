// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "symscreen/corpus.hpp"
#include "symscreen/extract.hpp"
#include "symscreen/screen.hpp"

namespace symscreen {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "symscreen-data";
  std::vector<BackendConfig> backends = default_backends();
  std::map<std::string, std::filesystem::path> corpora;  ///< corpus_ref -> ingest directory
  std::filesystem::path ui_dir;                          ///< static bundle; empty disables
  std::string token;                                     ///< shared bearer token; empty disables

  /// Throws ValidationError on duplicate backend ids.
  void validate() const;
};

/// Keys: host, port, data_dir, backends, corpora, ui_dir, token. Missing keys
/// keep their defaults.
ServiceConfig service_config_from_json(const nlohmann::ordered_json& j);

enum class RunState { pending, running, done, failed };

std::string to_string(RunState s);
RunState parse_run_state(std::string_view s);

struct Run {
  std::string run_id;
  std::string backend_id;
  std::string corpus_ref;
  std::vector<std::string> categories;
  RunState state = RunState::pending;
  std::string created_at;
  std::optional<std::string> finished_at;
  std::size_t done_pairs = 0;
  std::size_t total_pairs = 0;
  std::string error;

  friend bool operator==(const Run&, const Run&) = default;
};

nlohmann::ordered_json to_json(const Run& r);
Run run_from_json(const nlohmann::ordered_json& j);

enum class Verdict { accept, reject, modify };

std::string to_string(Verdict v);
Verdict parse_verdict(std::string_view s);

struct AdjudicationRequest {
  std::string note_id;
  std::string category_id;
  Verdict verdict = Verdict::accept;
  std::optional<std::vector<Span>> corrected_evidence;
  std::string reviewer;
  std::optional<std::string> run_id;  ///< detection source; latest done run when absent
};

AdjudicationRequest adjudication_request_from_json(const nlohmann::ordered_json& j);

struct Adjudication {
  std::string adjudication_id;
  std::string note_id;
  std::string category_id;
  Verdict verdict = Verdict::accept;
  std::optional<std::vector<Span>> corrected_evidence;
  std::string reviewer;
  std::string timestamp;
  std::string run_id;
  /// Gold label implied by the verdict against the referenced detection.
  bool gold_present = false;
  std::vector<Span> gold_evidence;
  std::optional<std::string> idempotency_key;

  friend bool operator==(const Adjudication&, const Adjudication&) = default;
};

nlohmann::ordered_json to_json(const Adjudication& a);
Adjudication adjudication_from_json(const nlohmann::ordered_json& j);

struct ReviewFilter {
  std::optional<std::string> category;
  bool only_positive = false;
  bool unreviewed_only = false;
};

struct ReviewItem {
  Detection detection;
  std::string note_text;
  std::optional<Adjudication> adjudication;  ///< latest live adjudication, any reviewer
};

nlohmann::ordered_json to_json(const ReviewItem& item, const Taxonomy& taxonomy = Taxonomy::canonical());

/// Live adjudications from different reviewers that disagree on the gold label.
struct GoldConflict {
  std::string note_id;
  std::string category_id;
  std::vector<Adjudication> adjudications;
};

struct AdjudicationResult {
  Adjudication adjudication;
  bool created = true;  ///< false when an idempotency key replayed an earlier request
};

/// Extraction runs and adjudications over append-only logs in `data_dir`:
/// `runs.log`, `adjudications.log` and `detections/<run_id>.jsonl`. State is
/// rebuilt from the logs on construction; a torn final line is discarded.
/// Runs left running by a crash are marked failed; pending runs are requeued.
class Service {
 public:
  explicit Service(ServiceConfig config, const Taxonomy& taxonomy = Taxonomy::canonical());
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const { return config_; }

  /// Throws NotFoundError for an unknown backend, corpus or category.
  Run start_run(const std::string& backend_id, const std::string& corpus_ref,
                const std::vector<std::string>& categories = {});
  Run get_run(const std::string& run_id) const;
  std::vector<Run> runs() const;

  /// Throws ConflictError unless the run is done.
  std::vector<Detection> detections(const std::string& run_id) const;
  std::vector<ReviewItem> review_queue(const std::string& run_id, const ReviewFilter& filter) const;

  /// Throws ValidationError for modify without evidence or out-of-bounds spans,
  /// NotFoundError when no done run holds the detection, and ConflictError when
  /// an idempotency key is reused with a different request.
  AdjudicationResult adjudicate(const AdjudicationRequest& request,
                                const std::optional<std::string>& idempotency_key = std::nullopt);

  /// Gold labels for the run's adjudicated pairs, sorted by (note, category).
  /// The latest live adjudication wins across reviewers. With `merge`, the
  /// corpus gold fills pairs that have no adjudication.
  std::vector<GoldLabel> project_gold(const std::string& run_id, bool merge = false) const;
  std::vector<GoldConflict> conflicts(const std::string& run_id) const;

  /// Symptom vector from the given run, or the latest done run whose corpus
  /// holds the patient.
  SymptomVector patient_vector(const std::string& patient_id,
                               const std::optional<std::string>& run_id = std::nullopt) const;

  nlohmann::ordered_json metrics() const;
  void count_request() { requests_.fetch_add(1, std::memory_order_relaxed); }

  /// Blocks until no run is pending or running, or the timeout elapses.
  bool wait_idle(std::chrono::milliseconds timeout) const;

  std::shared_ptr<const Corpus> corpus(const std::string& corpus_ref) const;

 private:
  void replay();
  void append(const std::filesystem::path& log, const nlohmann::ordered_json& record);
  void put_run(const Run& run);
  void add_adjudication(Adjudication a, std::optional<std::string> fingerprint);
  void worker_loop(std::stop_token stop);
  const Run& run_ref(const std::string& run_id) const;
  const std::vector<Detection>& done_detections(const std::string& run_id) const;
  std::map<std::string, const Adjudication*> live_for_pair(const std::string& note_id,
                                                           const std::string& category_id) const;
  const Adjudication* latest_live(const std::string& note_id, const std::string& category_id) const;
  const BackendConfig* find_backend(const std::string& id) const;

  ServiceConfig config_;
  const Taxonomy& taxonomy_;

  mutable std::shared_mutex mutex_;
  std::map<std::string, Run> runs_;
  std::vector<std::string> run_order_;
  std::map<std::string, std::vector<Detection>> detections_;
  std::vector<Adjudication> adjudications_;  ///< log order
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> by_pair_;
  std::map<std::string, std::size_t> by_key_;
  std::map<std::string, std::string> key_fingerprints_;
  std::size_t next_run_ = 1;
  std::size_t next_adjudication_ = 1;

  mutable std::mutex corpora_mutex_;
  mutable std::map<std::string, std::shared_ptr<const Corpus>> corpora_;

  std::mutex queue_mutex_;
  mutable std::condition_variable_any queue_cv_;
  std::deque<std::string> queue_;
  std::atomic<std::size_t> progress_{0};
  std::string active_run_;

  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> idempotent_replays_{0};

  std::jthread worker_;
};

/// Rewrites the logs in `data_dir` keeping the latest record per run and only
/// live adjudications; superseded requests keep their idempotency keys.
/// Projections are unchanged. Must not run while a service uses the directory.
void compact(const std::filesystem::path& data_dir);

/// HTTP front end. `on_listening` receives the bound port (useful with port 0).
/// Blocks until stop() is called from another thread.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  void run(const std::string& host, int port, const std::function<void(int)>& on_listening = {});
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace symscreen
