// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

// Connector generation. A connector is LLM-written text that stands in for a
// query (Q-Connector, the model input) or a document (D-Connector, the
// generated identifier). Backends are pluggable: a deterministic rule-based
// stub and an HTTP chat-completion client.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <vector>

#include "corpus.hpp"

namespace genret {

enum class PromptKind {
  kDConnector,
  kQConnector,
  kIterQConnector,
  kPseudoQuery,
  kPseudoAnswer,
};

const char* PromptKindName(PromptKind kind);

class PromptTemplate {
 public:
  static const PromptTemplate& For(PromptKind kind);

  PromptKind kind() const { return kind_; }
  const std::string& text() const { return text_; }
  const std::vector<std::string>& placeholders() const { return placeholders_; }

  // Substitutes every {name}. Fails when a placeholder has no binding;
  // substituted values are not re-scanned.
  std::string Render(const std::map<std::string, std::string>& bindings) const;

 private:
  PromptTemplate(PromptKind kind, std::string text,
                 std::vector<std::string> placeholders);

  PromptKind kind_;
  std::string text_;
  std::vector<std::string> placeholders_;
};

// Everything a backend may need. HTTP backends send `prompt`; rule-based
// backends read the structured fields.
struct GenRequest {
  PromptKind kind = PromptKind::kDConnector;
  std::string prompt;
  const Document* doc = nullptr;           // d / pseudo kinds
  std::string query;                       // q / iter / pseudo-answer kinds
  std::string answer;                      // iter kind: previous answer
  std::vector<const Document*> documents;  // iter kind: top-k documents
  int length = 0;                          // m or n
  std::uint64_t seed = 0;                  // pseudo-query kind
  int index = 0;                           // pseudo-query kind: k
};

class GenBackend {
 public:
  virtual ~GenBackend() = default;
  virtual std::string Generate(const GenRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Pure function of its inputs; performs no I/O.
class StubBackend : public GenBackend {
 public:
  std::string Generate(const GenRequest& request) override;
  std::string name() const override { return "stub"; }
};

// Stub whose iteration-round connectors also carry the gold document text,
// for controlled iteration experiments.
class GoldInjectingStub : public GenBackend {
 public:
  // Keyed by the raw query text.
  explicit GoldInjectingStub(std::map<std::string, std::string> gold_text);
  std::string Generate(const GenRequest& request) override;
  std::string name() const override { return "stub-oracle"; }

 private:
  StubBackend base_;
  std::map<std::string, std::string> gold_text_;
};

struct HttpConfig {
  std::string base_url;  // scheme://host[:port][/prefix]
  std::string model = "gpt-3.5-turbo-0613";
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  double timeout_s = 60.0;
  int max_attempts = 4;
  int max_tokens = 256;
  int max_in_flight = 4;
  double min_interval_s = 0.0;
  double backoff_base_s = 1.0;
  double backoff_factor = 2.0;
  double jitter_s = 0.25;  // uniform in [0, jitter_s) added to each wait
  std::uint64_t jitter_seed = 0;
  std::filesystem::path cache_dir;  // empty disables the cache
};

struct HttpStats {
  int attempts = 0;
  double backoff_s = 0.0;
};

// POSTs one chat-completion request and returns choices[0].message.content.
// Retries transport errors, 429 and 5xx with exponential backoff; other
// 4xx responses fail immediately with kBackendRequest, exhausted retries fail
// with kBackendTransport and unreadable bodies with kBackendProtocol.
std::string HttpGenerate(const HttpConfig& config, const std::string& prompt,
                         HttpStats* stats = nullptr);

// Keeps the text before the first blank line, trimmed.
std::string FirstParagraph(const std::string& text);

class HttpBackend : public GenBackend {
 public:
  explicit HttpBackend(HttpConfig config);
  std::string Generate(const GenRequest& request) override;
  std::string name() const override { return "http:" + config_.model; }
  const HttpConfig& config() const { return config_; }

 private:
  void Pace();

  HttpConfig config_;
  std::counting_semaphore<1024> in_flight_;
  std::mutex pace_mu_;
  std::chrono::steady_clock::time_point next_slot_{};
};

// Content-addressed response cache: one JSON file per (prompt, model).
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
  bool Lookup(const std::string& model, const std::string& prompt,
              std::string* response) const;
  void Store(const std::string& model, const std::string& prompt,
             const std::string& response) const;

 private:
  std::filesystem::path PathFor(const std::string& model,
                                const std::string& prompt) const;
  std::filesystem::path dir_;
};

// Sentences of `text` split after '.', '!' or '?'.
std::vector<std::string> SplitSentences(const std::string& text);

struct IterPromptOptions {
  int n = 64;
  int k_docs = 3;
  int max_doc_words = 60;
};

std::string GenDConnector(const Document& doc, int m, GenBackend& backend,
                          int max_prompt_words = 0);
std::string GenQConnector(const std::string& query, int n, GenBackend& backend);
std::string GenIterQConnector(const std::string& query,
                              const std::vector<const Document*>& topk_docs,
                              const std::string& prev_answer,
                              const IterPromptOptions& options,
                              GenBackend& backend);

}  // namespace genret
