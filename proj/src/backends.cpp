// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include <cmath>
#include <random>
#include <thread>

#include "httplib.h"
#include "symscreen/error.hpp"
#include "symscreen/extract.hpp"
#include "symscreen/json_io.hpp"
#include "symscreen/rng.hpp"
#include "symscreen/text.hpp"

namespace symscreen {

using jsonl::Json;

namespace {

constexpr int kMaxOutputTokens = 128;

Detection blank_detection(const BackendConfig& config, const Note& note, const SymptomCategory& category) {
  Detection d;
  d.note_id = note.note_id;
  d.category_id = category.id;
  d.backend_id = config.backend_id;
  return d;
}

Evidence evidence_for(const Note& note, text::ByteRange r) {
  return Evidence{r.start, r.end, note.text.substr(r.start, r.end - r.start)};
}

// --- keyword ---------------------------------------------------------------

class KeywordBackend final : public Backend {
 public:
  explicit KeywordBackend(BackendConfig config) : config_(std::move(config)) {}
  const BackendConfig& config() const override { return config_; }

  Detection detect(const Note& note, const SymptomCategory& category) const override {
    Detection d = blank_detection(config_, note, category);
    const auto matched = match_keywords(note.text, category.keywords);
    if (!matched) return d;
    d.present = true;
    // Evidence: first sentence holding the whole matched set, else the first
    // sentence holding any of its words (the set may span sentences).
    const KeywordSet& set = category.keywords[*matched];
    std::vector<KeywordSet> singles;
    for (const auto& w : set) singles.push_back({w});
    std::optional<text::ByteRange> any_hit;
    for (const auto& sentence : text::sentences(note.text)) {
      const std::string_view piece = std::string_view(note.text).substr(sentence.start, sentence.end - sentence.start);
      if (match_keywords(piece, std::span<const KeywordSet>(&set, 1))) {
        d.evidence.push_back(evidence_for(note, sentence));
        return d;
      }
      if (!any_hit && match_keywords(piece, singles)) any_hit = sentence;
    }
    if (any_hit) d.evidence.push_back(evidence_for(note, *any_hit));
    return d;
  }

 private:
  BackendConfig config_;
};

// --- mocks -----------------------------------------------------------------

class MockBackend : public Backend {
 public:
  MockBackend(BackendConfig config, const Corpus& corpus) : config_(std::move(config)), corpus_(corpus) {}
  const BackendConfig& config() const override { return config_; }

  Detection detect(const Note& note, const SymptomCategory& category) const override {
    Detection d = blank_detection(config_, note, category);
    if (const GoldLabel* g = corpus_.find_gold(note.note_id, category.id); g && g->present) {
      d.present = true;
      for (const Span& s : g->evidence) d.evidence.push_back(evidence_for(note, s));
    }
    return d;
  }

 protected:
  BackendConfig config_;
  const Corpus& corpus_;
};

class NoisyMockBackend final : public MockBackend {
 public:
  using MockBackend::MockBackend;

  Detection detect(const Note& note, const SymptomCategory& category) const override {
    Detection d = MockBackend::detect(note, category);
    const std::uint64_t key = fnv1a(category.id, fnv1a("\x1f", fnv1a(note.note_id)));
    Rng rng(config_.seed ^ key);
    const double u = rng.uniform();
    if (d.present && u < config_.fn_rate) {
      d.present = false;
      d.evidence.clear();
    } else if (!d.present && u < config_.fp_rate) {
      d.present = true;
      const auto sentences = text::sentences(note.text);
      if (!sentences.empty()) d.evidence.push_back(evidence_for(note, sentences.front()));
    }
    return d;
  }
};

// --- wire backends -----------------------------------------------------------

class WireBackend : public Backend {
 public:
  WireBackend(BackendConfig config, std::shared_ptr<CompletionTransport> transport)
      : config_(std::move(config)), transport_(std::move(transport)) {}
  const BackendConfig& config() const override { return config_; }

 protected:
  // Returns the completion text, or nullopt after exhausting retries (error in `error`).
  std::optional<std::string> call(std::string_view path, const Json& body, const std::function<std::string(const Json&)>& read,
                                  std::string& error) const {
    const std::string payload = body.dump();
    thread_local std::mt19937_64 jitter_engine{std::random_device{}()};
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        const double jitter = 0.5 + std::uniform_real_distribution<double>(0.0, 1.0)(jitter_engine);
        const auto delay = std::chrono::duration<double, std::milli>(
            static_cast<double>(config_.backoff_base.count()) * std::pow(2.0, attempt - 1) * jitter);
        std::this_thread::sleep_for(delay);
      }
      try {
        const std::string response = transport_->post(config_, path, payload);
        return read(Json::parse(response));
      } catch (const std::exception& e) {
        error = e.what();
      }
    }
    return std::nullopt;
  }

  Detection finish(Detection d, const std::optional<std::string>& completion, const std::string& error,
                   bool truncated) const {
    if (!completion) {
      d.status = DetectionStatus::backend_error;
      d.raw_response = error;
      return d;
    }
    d.raw_response = *completion;
    d.status = truncated ? DetectionStatus::truncated_ok : DetectionStatus::ok;
    return d;
  }

  Json base_body() const {
    Json body;
    body["model"] = config_.model_name;
    return body;
  }

  BackendConfig config_;
  std::shared_ptr<CompletionTransport> transport_;
};

class ChatBackend final : public WireBackend {
 public:
  ChatBackend(BackendConfig config, std::shared_ptr<CompletionTransport> transport, const Taxonomy& taxonomy)
      : WireBackend(std::move(config), std::move(transport)), taxonomy_(taxonomy) {}

  Detection detect(const Note& note, const SymptomCategory& category) const override {
    const TruncateResult cut = truncate(note.text, config_.char_limit);
    const auto shots = taxonomy_.shots_for(category);
    const ChatPrompt prompt = build_chat_prompt(category, cut.text, shots);
    Json body = base_body();
    body["messages"] = prompt.to_json();
    body["temperature"] = 0;
    body["max_tokens"] = kMaxOutputTokens;
    body["stop"] = Json::array({"\n"});

    std::string error;
    const auto completion = call("/v1/chat/completions", body, [](const Json& r) {
      return r.at("choices").at(0).at("message").at("content").get<std::string>();
    }, error);
    Detection d = finish(blank_detection(config_, note, category), completion, error, cut.was_truncated);
    if (!completion) return d;

    const ChatParse parsed = parse_chat_response(*completion);
    if (std::holds_alternative<Unparseable>(parsed)) {
      d.status = DetectionStatus::unparseable;
      return d;
    }
    const auto& verdict = std::get<ChatVerdict>(parsed);
    d.present = verdict.present;
    if (verdict.present && verdict.quote) {
      if (const auto where = text::find_normalized(note.text, *verdict.quote)) {
        d.evidence.push_back(evidence_for(note, *where));
      } else {
        d.evidence.push_back(Evidence{std::nullopt, std::nullopt, *verdict.quote});
      }
    }
    return d;
  }

 private:
  const Taxonomy& taxonomy_;
};

class EntailmentBackend final : public WireBackend {
 public:
  using WireBackend::WireBackend;

  Detection detect(const Note& note, const SymptomCategory& category) const override {
    const TruncateResult cut = truncate(note.text, config_.char_limit);
    Json body = base_body();
    body["prompt"] = build_entailment_prompt(category, cut.text);
    body["temperature"] = 0;
    body["max_tokens"] = kMaxOutputTokens;
    body["stop"] = Json::array({"\n"});

    std::string error;
    const auto completion = call("/v1/completions", body, [](const Json& r) {
      return r.at("choices").at(0).at("text").get<std::string>();
    }, error);
    Detection d = finish(blank_detection(config_, note, category), completion, error, cut.was_truncated);
    if (!completion) return d;

    const auto verdict = parse_entailment_response(*completion);
    if (!verdict) {
      d.status = DetectionStatus::unparseable;
      return d;
    }
    d.present = *verdict;
    return d;
  }
};

// --- transport -------------------------------------------------------------

class HttpTransport final : public CompletionTransport {
 public:
  std::string post(const BackendConfig& config, std::string_view path, const std::string& body) override {
    // Split "scheme://host:port/prefix" into the client address and a path prefix.
    std::string base = config.endpoint;
    std::string prefix;
    const std::size_t scheme = base.find("://");
    const std::size_t slash = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (slash != std::string::npos) {
      prefix = base.substr(slash);
      base.resize(slash);
    }
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client client(base);
    if (!client.is_valid()) throw RuntimeFailure("invalid endpoint '" + config.endpoint + "'");
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);

    const auto res = client.Post(prefix + std::string(path), headers, body, "application/json");
    if (!res) throw RuntimeFailure("request to " + config.endpoint + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
      throw RuntimeFailure("endpoint returned HTTP " + std::to_string(res->status));
    }
    return res->body;
  }
};

}  // namespace

std::shared_ptr<CompletionTransport> make_http_transport() { return std::make_shared<HttpTransport>(); }

std::unique_ptr<Backend> make_backend(const BackendConfig& config, const Corpus& corpus, const Taxonomy& taxonomy,
                                      std::shared_ptr<CompletionTransport> transport) {
  config.validate();
  if (!transport) transport = make_http_transport();
  switch (config.kind) {
    case BackendKind::keyword: return std::make_unique<KeywordBackend>(config);
    case BackendKind::mock: return std::make_unique<MockBackend>(config, corpus);
    case BackendKind::noisy_mock: return std::make_unique<NoisyMockBackend>(config, corpus);
    case BackendKind::chat: return std::make_unique<ChatBackend>(config, std::move(transport), taxonomy);
    case BackendKind::entailment: return std::make_unique<EntailmentBackend>(config, std::move(transport));
  }
  throw ValidationError("unsupported backend kind");
}

}  // namespace symscreen
