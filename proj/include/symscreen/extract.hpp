// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "symscreen/corpus.hpp"
#include "symscreen/taxonomy.hpp"

namespace symscreen {

// ---------------------------------------------------------------------------
// Detections

enum class DetectionStatus { ok, unparseable, backend_error, truncated_ok };

std::string to_string(DetectionStatus s);
DetectionStatus parse_detection_status(std::string_view s);

/// A quoted piece of evidence. Offsets are absent when the quote could not be
/// located in the note (for example when a model paraphrased).
struct Evidence {
  std::optional<std::size_t> start;
  std::optional<std::size_t> end;
  std::string quote;

  friend bool operator==(const Evidence&, const Evidence&) = default;
};

struct Detection {
  std::string note_id;
  std::string category_id;
  bool present = false;
  std::vector<Evidence> evidence;
  std::string backend_id;
  DetectionStatus status = DetectionStatus::ok;
  std::optional<std::string> raw_response;

  friend bool operator==(const Detection&, const Detection&) = default;
};

nlohmann::ordered_json to_json(const Detection& d);
Detection detection_from_json(const nlohmann::ordered_json& j);
std::vector<Detection> read_detections(std::istream& in, std::string_view source = "detections.jsonl");
std::string detections_to_jsonl(std::span<const Detection> detections);

// ---------------------------------------------------------------------------
// Backend configuration

enum class BackendKind { keyword, chat, entailment, mock, noisy_mock };

std::string to_string(BackendKind k);
BackendKind parse_backend_kind(std::string_view s);

struct BackendConfig {
  std::string backend_id;
  BackendKind kind = BackendKind::keyword;
  std::string endpoint;    ///< base URL, chat/entailment only
  std::string model_name;
  std::size_t char_limit = 6000;
  int max_retries = 4;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds backoff_base{500};
  std::size_t parallelism = 1;
  double fp_rate = 0.0;    ///< noisy_mock only
  double fn_rate = 0.0;    ///< noisy_mock only
  std::uint64_t seed = 7;  ///< mocks only
  std::string api_key;     ///< bearer token for wire backends; empty for none

  /// Throws ValidationError when char_limit or parallelism is zero, a rate is
  /// outside [0,1], or a wire backend lacks an endpoint.
  void validate() const;
};

nlohmann::ordered_json to_json(const BackendConfig& c);
/// Missing fields take their defaults; `SYMSCREEN_ENDPOINT` and
/// `SYMSCREEN_API_KEY` fill endpoint and key for wire kinds when unset.
BackendConfig backend_from_json(const nlohmann::ordered_json& j);

/// Backends available without a configuration file: keyword, mock, noisy_mock
/// (fp 0.1, fn 0.2), and chat/entailment pointed at SYMSCREEN_ENDPOINT.
std::vector<BackendConfig> default_backends();

// ---------------------------------------------------------------------------
// Prompt construction and response parsing

struct TruncateResult {
  std::string text;
  bool was_truncated = false;
};

/// Cut to at most `char_limit` Unicode scalar values. When a whitespace
/// character occurs within 200 characters before the limit the cut moves back
/// to it. `char_limit` must be at least 1.
TruncateResult truncate(std::string_view text, std::size_t char_limit);

enum class Role { system, user, assistant };
std::string to_string(Role r);

struct ChatMessage {
  Role role = Role::user;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatPrompt {
  std::vector<ChatMessage> messages;
  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

inline constexpr std::string_view kSystemPrompt = "You are a medical AI assistant.";
inline constexpr std::size_t kChatShotCount = 3;

/// System turn, one user/assistant pair per exemplar, then the target note.
/// Throws ValidationError unless exactly three exemplars are given.
ChatPrompt build_chat_prompt(const SymptomCategory& category, std::string_view note_text, std::span<const Shot> shots);

/// `Premise: This is an EHR note: <note>. Hypothesis: <h> Does the premise entail the hypothesis?`
std::string build_entailment_prompt(const SymptomCategory& category, std::string_view note_text);

struct ChatVerdict {
  bool present = false;
  std::optional<std::string> quote;
  friend bool operator==(const ChatVerdict&, const ChatVerdict&) = default;
};
struct Unparseable {
  friend bool operator==(const Unparseable&, const Unparseable&) = default;
};
using ChatParse = std::variant<ChatVerdict, Unparseable>;

/// Total: every input maps to "no", "yes" (with optional quote) or Unparseable.
ChatParse parse_chat_response(std::string_view raw) noexcept;

/// nullopt means unparseable.
std::optional<bool> parse_entailment_response(std::string_view raw) noexcept;

// ---------------------------------------------------------------------------
// Keyword baseline

/// Whole-word, case-insensitive, unstemmed match of any keyword set.
/// Returns the index of the first matching set.
std::optional<std::size_t> match_keywords(std::string_view text, std::span<const KeywordSet> sets);

// ---------------------------------------------------------------------------
// Wire transport

/// Posts a JSON body to `<endpoint><path>` and returns the response body.
/// Throws RuntimeFailure on transport errors or non-2xx statuses.
class CompletionTransport {
 public:
  virtual ~CompletionTransport() = default;
  virtual std::string post(const BackendConfig& config, std::string_view path, const std::string& body) = 0;
};

/// cpp-httplib client; a fresh connection per call, so safe for concurrent use.
std::shared_ptr<CompletionTransport> make_http_transport();

// ---------------------------------------------------------------------------
// Backends and the runner

class Backend {
 public:
  virtual ~Backend() = default;
  [[nodiscard]] virtual const BackendConfig& config() const = 0;
  /// Never throws for per-pair failures; they become status=backend_error.
  [[nodiscard]] virtual Detection detect(const Note& note, const SymptomCategory& category) const = 0;
};

/// Mocks read gold labels from `corpus`; wire kinds use `transport`
/// (the HTTP transport when null).
std::unique_ptr<Backend> make_backend(const BackendConfig& config, const Corpus& corpus,
                                      const Taxonomy& taxonomy = Taxonomy::canonical(),
                                      std::shared_ptr<CompletionTransport> transport = nullptr);

Detection detect(const BackendConfig& config, const Note& note, const SymptomCategory& category,
                 const Corpus& corpus);

struct RunOptions {
  std::size_t parallelism = 1;
  std::atomic<std::size_t>* progress = nullptr;  ///< incremented once per finished pair
};

/// One detection per (note, category), sorted by (note_id, category_id);
/// the result does not depend on parallelism.
std::vector<Detection> run_extraction(const Backend& backend, const Corpus& corpus,
                                      std::span<const SymptomCategory> categories, const RunOptions& options = {});

}  // namespace symscreen
