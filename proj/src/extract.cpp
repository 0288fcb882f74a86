// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include "symscreen/extract.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <thread>
#include <unordered_set>

#include "symscreen/error.hpp"
#include "symscreen/json_io.hpp"
#include "symscreen/text.hpp"

namespace symscreen {

using jsonl::Json;

std::string to_string(DetectionStatus s) {
  switch (s) {
    case DetectionStatus::ok: return "ok";
    case DetectionStatus::unparseable: return "unparseable";
    case DetectionStatus::backend_error: return "backend_error";
    case DetectionStatus::truncated_ok: return "truncated_ok";
  }
  return "ok";
}

DetectionStatus parse_detection_status(std::string_view s) {
  if (s == "ok") return DetectionStatus::ok;
  if (s == "unparseable") return DetectionStatus::unparseable;
  if (s == "backend_error") return DetectionStatus::backend_error;
  if (s == "truncated_ok") return DetectionStatus::truncated_ok;
  throw ValidationError("invalid detection status '" + std::string(s) + "'");
}

Json to_json(const Detection& d) {
  Json j;
  j["note_id"] = d.note_id;
  j["category_id"] = d.category_id;
  j["present"] = d.present;
  Json ev = Json::array();
  for (const auto& e : d.evidence) {
    Json item;
    item["start"] = e.start ? Json(*e.start) : Json(nullptr);
    item["end"] = e.end ? Json(*e.end) : Json(nullptr);
    item["quote"] = e.quote;
    ev.push_back(std::move(item));
  }
  j["evidence"] = std::move(ev);
  j["backend_id"] = d.backend_id;
  j["status"] = to_string(d.status);
  if (d.raw_response) j["raw_response"] = *d.raw_response;
  return j;
}

Detection detection_from_json(const Json& j) {
  Detection d;
  d.note_id = j.at("note_id").get<std::string>();
  d.category_id = j.at("category_id").get<std::string>();
  d.present = j.at("present").get<bool>();
  if (j.contains("evidence")) {
    for (const auto& e : j["evidence"]) {
      Evidence ev;
      if (e.contains("start") && !e["start"].is_null()) ev.start = e["start"].get<std::size_t>();
      if (e.contains("end") && !e["end"].is_null()) ev.end = e["end"].get<std::size_t>();
      if (e.contains("quote")) ev.quote = e["quote"].get<std::string>();
      d.evidence.push_back(std::move(ev));
    }
  }
  d.backend_id = j.value("backend_id", std::string{});
  d.status = parse_detection_status(j.value("status", std::string{"ok"}));
  if (j.contains("raw_response") && !j["raw_response"].is_null()) {
    d.raw_response = j["raw_response"].get<std::string>();
  }
  if (d.present && d.status != DetectionStatus::ok && d.status != DetectionStatus::truncated_ok) {
    throw ValidationError("present detection with status " + to_string(d.status));
  }
  return d;
}

std::vector<Detection> read_detections(std::istream& in, std::string_view source) {
  std::vector<Detection> out;
  jsonl::for_each_object(in, source, [&](const Json& j) { out.push_back(detection_from_json(j)); });
  return out;
}

std::string detections_to_jsonl(std::span<const Detection> detections) {
  std::string out;
  for (const auto& d : detections) {
    out += to_json(d).dump();
    out += '\n';
  }
  return out;
}

std::string to_string(BackendKind k) {
  switch (k) {
    case BackendKind::keyword: return "keyword";
    case BackendKind::chat: return "chat";
    case BackendKind::entailment: return "entailment";
    case BackendKind::mock: return "mock";
    case BackendKind::noisy_mock: return "noisy_mock";
  }
  return "keyword";
}

BackendKind parse_backend_kind(std::string_view s) {
  if (s == "keyword") return BackendKind::keyword;
  if (s == "chat") return BackendKind::chat;
  if (s == "entailment") return BackendKind::entailment;
  if (s == "mock") return BackendKind::mock;
  if (s == "noisy_mock") return BackendKind::noisy_mock;
  throw ValidationError("invalid backend kind '" + std::string(s) + "'");
}

void BackendConfig::validate() const {
  if (backend_id.empty()) throw ValidationError("backend_id must not be empty");
  if (char_limit < 1) throw ValidationError("char_limit must be at least 1");
  if (parallelism < 1) throw ValidationError("parallelism must be at least 1");
  if (max_retries < 0) throw ValidationError("max_retries must not be negative");
  if (!(fp_rate >= 0.0 && fp_rate <= 1.0) || !(fn_rate >= 0.0 && fn_rate <= 1.0)) {
    throw ValidationError("fp_rate and fn_rate must be in [0,1]");
  }
  if ((kind == BackendKind::chat || kind == BackendKind::entailment) && endpoint.empty()) {
    throw ValidationError("backend '" + backend_id + "' needs an endpoint");
  }
}

Json to_json(const BackendConfig& c) {
  Json j;
  j["backend_id"] = c.backend_id;
  j["kind"] = to_string(c.kind);
  j["endpoint"] = c.endpoint;
  j["model_name"] = c.model_name;
  j["char_limit"] = c.char_limit;
  j["max_retries"] = c.max_retries;
  j["timeout_ms"] = c.timeout.count();
  j["backoff_base_ms"] = c.backoff_base.count();
  j["parallelism"] = c.parallelism;
  j["fp_rate"] = c.fp_rate;
  j["fn_rate"] = c.fn_rate;
  j["seed"] = c.seed;
  return j;
}

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

}  // namespace

BackendConfig backend_from_json(const Json& j) {
  BackendConfig c;
  c.backend_id = j.at("backend_id").get<std::string>();
  c.kind = parse_backend_kind(j.at("kind").get<std::string>());
  c.endpoint = j.value("endpoint", std::string{});
  c.model_name = j.value("model_name", std::string{});
  c.char_limit = j.value("char_limit", c.char_limit);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", c.timeout.count()));
  c.backoff_base = std::chrono::milliseconds(j.value("backoff_base_ms", c.backoff_base.count()));
  c.parallelism = j.value("parallelism", c.parallelism);
  c.fp_rate = j.value("fp_rate", c.fp_rate);
  c.fn_rate = j.value("fn_rate", c.fn_rate);
  c.seed = j.value("seed", c.seed);
  c.api_key = j.value("api_key", std::string{});
  if (c.kind == BackendKind::chat || c.kind == BackendKind::entailment) {
    if (c.endpoint.empty()) c.endpoint = env_or("SYMSCREEN_ENDPOINT", "");
    if (c.api_key.empty()) c.api_key = env_or("SYMSCREEN_API_KEY", "");
  }
  c.validate();
  return c;
}

std::vector<BackendConfig> default_backends() {
  std::vector<BackendConfig> out;
  BackendConfig keyword;
  keyword.backend_id = "keyword";
  keyword.kind = BackendKind::keyword;
  out.push_back(keyword);

  BackendConfig mock;
  mock.backend_id = "mock";
  mock.kind = BackendKind::mock;
  out.push_back(mock);

  BackendConfig noisy;
  noisy.backend_id = "noisy_mock";
  noisy.kind = BackendKind::noisy_mock;
  noisy.fp_rate = 0.1;
  noisy.fn_rate = 0.2;
  out.push_back(noisy);

  const std::string endpoint = env_or("SYMSCREEN_ENDPOINT", "http://127.0.0.1:8000");
  const std::string key = env_or("SYMSCREEN_API_KEY", "");
  BackendConfig chat;
  chat.backend_id = "chat";
  chat.kind = BackendKind::chat;
  chat.endpoint = endpoint;
  chat.model_name = "microsoft/Phi-3.5-mini-instruct";
  chat.api_key = key;
  out.push_back(chat);

  BackendConfig entail;
  entail.backend_id = "entailment";
  entail.kind = BackendKind::entailment;
  entail.endpoint = endpoint;
  entail.model_name = "google/flan-t5-small";
  entail.api_key = key;
  out.push_back(entail);
  return out;
}

TruncateResult truncate(std::string_view s, std::size_t char_limit) {
  if (char_limit < 1) throw ValidationError("char_limit must be at least 1");
  if (text::utf8_length(s) <= char_limit) return {std::string(s), false};

  constexpr std::size_t kWhitespaceLookback = 200;
  const std::size_t cut = text::utf8_offset(s, char_limit);
  // Walk back at most kWhitespaceLookback code points looking for whitespace.
  std::size_t stepped = 0;
  for (std::size_t i = cut; i > 0 && stepped < kWhitespaceLookback;) {
    --i;
    const auto byte = static_cast<unsigned char>(s[i]);
    if ((byte & 0xC0) == 0x80) continue;
    ++stepped;
    if (std::isspace(byte) && i > 0) return {std::string(s.substr(0, i)), true};
  }
  return {std::string(s.substr(0, cut)), true};
}

std::string to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Json ChatPrompt::to_json() const {
  Json arr = Json::array();
  for (const auto& m : messages) arr.push_back(Json{{"role", to_string(m.role)}, {"content", m.content}});
  return arr;
}

ChatPrompt build_chat_prompt(const SymptomCategory& category, std::string_view note_text,
                             std::span<const Shot> shots) {
  if (shots.size() != kChatShotCount) {
    throw ValidationError("chat prompts need exactly 3 exemplars, got " + std::to_string(shots.size()));
  }
  ChatPrompt p;
  p.messages.push_back({Role::system, std::string(kSystemPrompt)});
  for (const Shot& shot : shots) {
    p.messages.push_back({Role::user, "Here is an EHR note: '" + shot.note + "' " + category.chat_query});
    p.messages.push_back({Role::assistant, shot.quote ? "Yes: '" + *shot.quote + "'" : std::string("No.")});
  }
  p.messages.push_back({Role::user, "Here is an EHR note: " + std::string(note_text) + ". " + category.chat_query});
  return p;
}

std::string build_entailment_prompt(const SymptomCategory& category, std::string_view note_text) {
  return "Premise: This is an EHR note: " + std::string(note_text) + ". Hypothesis: " + category.hypothesis +
         " Does the premise entail the hypothesis?";
}

namespace {

std::string first_token(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
  return text::to_lower_ascii(s.substr(0, i));
}

constexpr std::pair<std::string_view, std::string_view> kQuotePairs[] = {
    {"'", "'"}, {"\"", "\""}, {"\xE2\x80\x98", "\xE2\x80\x99"}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}};

// Repeatedly strips matching enclosing quotes; reports whether any were removed.
bool strip_enclosing_quotes(std::string_view& s) {
  bool stripped = false;
  for (bool again = true; again;) {
    again = false;
    s = text::trim(s);
    for (const auto& [open, close] : kQuotePairs) {
      if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
        s = s.substr(open.size(), s.size() - open.size() - close.size());
        again = stripped = true;
        break;
      }
    }
  }
  return stripped;
}

std::optional<std::string> extract_quote(std::string_view rest) {
  const std::size_t eol = rest.find('\n');
  std::string_view line = eol == std::string_view::npos ? rest : rest.substr(0, eol);
  line = text::trim(line);
  // Trailing sentence punctuation after a closing quote: "'...'." -> "'...'"
  while (!line.empty() && (line.back() == '.' || line.back() == ',')) {
    const std::string_view without = line.substr(0, line.size() - 1);
    if (without.ends_with("'") || without.ends_with("\"") || without.ends_with("\xE2\x80\x99") ||
        without.ends_with("\xE2\x80\x9D")) {
      line = without;
    } else {
      break;
    }
  }
  if (!strip_enclosing_quotes(line)) {
    const std::size_t open = line.find('"');
    const std::size_t close = open == std::string_view::npos ? open : line.find('"', open + 1);
    if (close != std::string_view::npos && close > open + 1) {
      line = line.substr(open + 1, close - open - 1);
      strip_enclosing_quotes(line);
    }
  }
  line = text::trim(line);
  if (line.empty()) return std::nullopt;
  return std::string(line);
}

}  // namespace

ChatParse parse_chat_response(std::string_view raw) noexcept {
  try {
    const std::string_view s = text::trim(raw);
    const std::string token = first_token(s);
    if (token == "no") return ChatVerdict{false, std::nullopt};
    if (token != "yes") return Unparseable{};
    std::string_view rest = s.substr(3);
    const std::size_t line_end = rest.find('\n');
    const std::size_t colon = rest.find(':');
    if (colon != std::string_view::npos && (line_end == std::string_view::npos || colon < line_end)) {
      rest = rest.substr(colon + 1);
    } else {
      while (!rest.empty() && (rest.front() == ',' || rest.front() == '.' || rest.front() == '-' ||
                               rest.front() == '!' || rest.front() == ' ')) {
        rest.remove_prefix(1);
      }
    }
    return ChatVerdict{true, extract_quote(rest)};
  } catch (...) {
    return Unparseable{};
  }
}

std::optional<bool> parse_entailment_response(std::string_view raw) noexcept {
  try {
    const std::string token = first_token(text::trim(raw));
    if (token == "yes" || token == "entailment") return true;
    if (token == "no" || token == "not" || token == "neutral" || token == "contradiction") return false;
  } catch (...) {
  }
  return std::nullopt;
}

std::optional<std::size_t> match_keywords(std::string_view s, std::span<const KeywordSet> sets) {
  std::unordered_set<std::string> words;
  for (auto& t : text::word_tokens(s)) words.insert(std::move(t.word));
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const bool all = std::all_of(sets[i].begin(), sets[i].end(),
                                 [&](const std::string& w) { return words.contains(text::to_lower_ascii(w)); });
    if (all) return i;
  }
  return std::nullopt;
}

Detection detect(const BackendConfig& config, const Note& note, const SymptomCategory& category,
                 const Corpus& corpus) {
  return make_backend(config, corpus)->detect(note, category);
}

std::vector<Detection> run_extraction(const Backend& backend, const Corpus& corpus,
                                      std::span<const SymptomCategory> categories, const RunOptions& options) {
  const std::size_t total = corpus.notes().size() * categories.size();
  std::vector<Detection> out(total);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
      const Note& note = corpus.notes()[i / categories.size()];
      const SymptomCategory& category = categories[i % categories.size()];
      try {
        out[i] = backend.detect(note, category);
      } catch (const std::exception& e) {
        Detection d;
        d.note_id = note.note_id;
        d.category_id = category.id;
        d.backend_id = backend.config().backend_id;
        d.status = DetectionStatus::backend_error;
        d.raw_response = e.what();
        out[i] = std::move(d);
      }
      if (options.progress) options.progress->fetch_add(1);
    }
  };

  const std::size_t threads = std::min(std::max<std::size_t>(options.parallelism, 1), std::max<std::size_t>(total, 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    if (a.note_id != b.note_id) return a.note_id < b.note_id;
    return a.category_id < b.category_id;
  });
  return out;
}

}  // namespace symscreen
