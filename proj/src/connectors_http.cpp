// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <optional>
#include <random>
#include <thread>

#include <httplib.h>

#include "connectors.hpp"
#include "error.hpp"
#include "jsonl.hpp"
#include "log.hpp"

namespace genret {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix + /chat/completions
};

Endpoint ParseBaseUrl(const std::string& base_url) {
  const auto scheme = base_url.find("://");
  if (base_url.empty() || scheme == std::string::npos)
    Fail(ErrorCode::kInvalidArgument,
         "llm.base_url must look like scheme://host[:port][/prefix], got '" +
             base_url + "'");
  const auto slash = base_url.find('/', scheme + 3);
  Endpoint e;
  e.origin = base_url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : base_url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  e.path = prefix + "/chat/completions";
  return e;
}

bool Retryable(int status) { return status == 429 || status >= 500; }

std::string ExtractContent(const std::string& body) {
  try {
    const Json j = Json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const std::exception& e) {
    Fail(ErrorCode::kBackendProtocol,
         std::string("unreadable chat-completion response: ") + e.what());
  }
}

}  // namespace

std::string HttpGenerate(const HttpConfig& config, const std::string& prompt,
                         HttpStats* stats) {
  Require(config.max_attempts >= 1, "llm.max_attempts must be >= 1");
  Require(config.timeout_s > 0.0, "llm.timeout_s must be > 0");
  const Endpoint endpoint = ParseBaseUrl(config.base_url);

  httplib::Client client(endpoint.origin);
  const auto timeout = std::chrono::duration<double>(config.timeout_s);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  client.set_connection_timeout(timeout_us);
  client.set_read_timeout(timeout_us);
  client.set_write_timeout(timeout_us);

  httplib::Headers headers;
  if (!config.api_key_env.empty()) {
    if (const char* key = std::getenv(config.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const Json request = {
      {"model", config.model},
      {"messages", Json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", config.temperature},
      {"max_tokens", config.max_tokens}};
  const std::string payload = request.dump();

  std::mt19937_64 rng(config.jitter_seed ^ std::hash<std::string>{}(prompt));
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  double wait = config.backoff_base_s;
  std::string last_error;
  HttpStats local;

  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    ++local.attempts;
    auto result = client.Post(endpoint.path, headers, payload, "application/json");
    if (result && result->status == 200) {
      if (stats) *stats = local;
      return ExtractContent(result->body);
    }
    if (result && !Retryable(result->status)) {
      if (stats) *stats = local;
      Fail(ErrorCode::kBackendRequest, "chat-completion request rejected with HTTP " +
                                           std::to_string(result->status) + ": " +
                                           result->body.substr(0, 200));
    }
    last_error = result ? "HTTP " + std::to_string(result->status)
                        : "transport error: " + httplib::to_string(result.error());
    if (attempt == config.max_attempts) break;
    const double sleep_s = wait + config.jitter_s * jitter(rng);
    Log(LogLevel::kWarning, "chat-completion attempt " + std::to_string(attempt) +
                             " failed (" + last_error + "), retrying in " +
                             std::to_string(sleep_s) + "s");
    std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));
    local.backoff_s += sleep_s;
    wait *= config.backoff_factor;
  }
  if (stats) *stats = local;
  Fail(ErrorCode::kBackendTransport, "chat-completion failed after " +
                                         std::to_string(config.max_attempts) +
                                         " attempts: " + last_error);
}

HttpBackend::HttpBackend(HttpConfig config)
    : config_(std::move(config)), in_flight_(std::max(1, config_.max_in_flight)) {
  Require(config_.max_in_flight >= 1 && config_.max_in_flight <= 1024,
          "llm.max_in_flight must be in [1, 1024]");
  ParseBaseUrl(config_.base_url);
}

void HttpBackend::Pace() {
  if (config_.min_interval_s <= 0.0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard<std::mutex> lock(pace_mu_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(config_.min_interval_s));
  }
  std::this_thread::sleep_until(slot);
}

std::string HttpBackend::Generate(const GenRequest& request) {
  std::optional<ResponseCache> cache;
  if (!config_.cache_dir.empty()) {
    std::filesystem::create_directories(config_.cache_dir);
    cache.emplace(config_.cache_dir);
    std::string hit;
    if (cache->Lookup(config_.model, request.prompt, &hit)) return hit;
  }
  in_flight_.acquire();
  std::string text;
  try {
    Pace();
    text = FirstParagraph(HttpGenerate(config_, request.prompt));
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();
  if (cache) cache->Store(config_.model, request.prompt, text);
  return text;
}

}  // namespace genret
