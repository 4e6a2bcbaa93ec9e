// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>

#include "connectors.hpp"
#include "jsonl.hpp"
#include "test_util.hpp"

// After Eigen: <resolv.h> defines an _res macro.
#include <httplib.h>

namespace genret {
namespace {

using Clock = std::chrono::steady_clock;
using testing::CodeOf;

// Chat-completion mock on a loopback port. `respond` sees the 1-based request
// number.
class MockServer {
 public:
  using Handler = std::function<void(int, const httplib::Request&, httplib::Response&)>;

  explicit MockServer(Handler respond) : respond_(std::move(respond)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++requests_;
      {
        std::lock_guard lock(mu_);
        last_body_ = req.body;
        last_auth_ = req.get_header_value("Authorization");
      }
      respond_(n, req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  HttpConfig Config() const {
    HttpConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.model = "mock-model";
    c.api_key_env = "GENRET_TEST_UNSET_KEY";
    c.timeout_s = 5.0;
    c.jitter_s = 0.0;
    return c;
  }
  int requests() const { return requests_; }
  std::string last_body() {
    std::lock_guard lock(mu_);
    return last_body_;
  }
  std::string last_auth() {
    std::lock_guard lock(mu_);
    return last_auth_;
  }

 private:
  Handler respond_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::mutex mu_;
  std::string last_body_, last_auth_;
};

std::string Completion(const std::string& text) {
  return Json{{"choices", Json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}})}}
      .dump();
}

void Ok(httplib::Response& res, const std::string& text) {
  res.status = 200;
  res.set_content(Completion(text), "application/json");
}

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

TEST_CASE("fixed body round-trips and the request is well formed") {
  MockServer server([](int, const httplib::Request&, httplib::Response& res) {
    Ok(res, "the generated context");
  });
  HttpConfig c = server.Config();
  c.temperature = 0.0;
  c.max_tokens = 77;
  CHECK(HttpGenerate(c, "the prompt") == "the generated context");
  CHECK(server.requests() == 1);
  const Json body = Json::parse(server.last_body());
  CHECK(body.at("model") == "mock-model");
  CHECK(body.at("max_tokens") == 77);
  CHECK(body.at("temperature") == 0.0);
  CHECK(body.at("messages").at(0).at("role") == "user");
  CHECK(body.at("messages").at(0).at("content") == "the prompt");
  CHECK(server.last_auth().empty());
}

TEST_CASE("api key is read from the named environment variable") {
  MockServer server([](int, const httplib::Request&, httplib::Response& res) { Ok(res, "x"); });
  HttpConfig c = server.Config();
  c.api_key_env = "GENRET_TEST_API_KEY";
  ::setenv("GENRET_TEST_API_KEY", "secret-123", 1);
  HttpGenerate(c, "p");
  ::unsetenv("GENRET_TEST_API_KEY");
  CHECK(server.last_auth() == "Bearer secret-123");
}

TEST_CASE("rate limiting is retried with exponential backoff") {
  MockServer server([](int n, const httplib::Request&, httplib::Response& res) {
    if (n <= 2) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
      return;
    }
    Ok(res, "finally");
  });
  HttpConfig c = server.Config();
  c.backoff_base_s = 1.0;
  c.backoff_factor = 2.0;
  HttpStats stats;
  const auto start = Clock::now();
  CHECK(HttpGenerate(c, "p", &stats) == "finally");
  CHECK(Seconds(start) >= 3.0);
  CHECK(server.requests() == 3);
  CHECK(stats.attempts == 3);
  CHECK(stats.backoff_s == doctest::Approx(3.0));
}

TEST_CASE("client errors fail after exactly one request") {
  MockServer server([](int, const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content(R"({"error":"bad"})", "application/json");
  });
  CHECK(CodeOf([&] { HttpGenerate(server.Config(), "p"); }) == ErrorCode::kBackendRequest);
  CHECK(server.requests() == 1);
}

TEST_CASE("server errors exhaust the attempt budget") {
  MockServer server([](int, const httplib::Request&, httplib::Response& res) {
    res.status = 503;
  });
  HttpConfig c = server.Config();
  c.max_attempts = 3;
  c.backoff_base_s = 0.05;
  c.timeout_s = 2.0;
  HttpStats stats;
  const auto start = Clock::now();
  CHECK(CodeOf([&] { HttpGenerate(c, "p", &stats); }) == ErrorCode::kBackendTransport);
  CHECK(server.requests() == 3);
  CHECK(stats.attempts <= c.max_attempts);
  CHECK(Seconds(start) <= stats.backoff_s + c.max_attempts * c.timeout_s);
}

TEST_CASE("malformed bodies are protocol errors") {
  MockServer server([](int n, const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    if (n == 1)
      res.set_content("not json", "application/json");
    else
      res.set_content(R"({"choices":[]})", "application/json");
  });
  CHECK(CodeOf([&] { HttpGenerate(server.Config(), "p"); }) == ErrorCode::kBackendProtocol);
  CHECK(CodeOf([&] { HttpGenerate(server.Config(), "p"); }) == ErrorCode::kBackendProtocol);
  CHECK(server.requests() == 2);
}

TEST_CASE("unreachable hosts are transport errors") {
  HttpConfig c;
  {
    MockServer server([](int, const httplib::Request&, httplib::Response&) {});
    c = server.Config();
  }
  c.max_attempts = 2;
  c.backoff_base_s = 0.01;
  c.timeout_s = 1.0;
  CHECK(CodeOf([&] { HttpGenerate(c, "p"); }) == ErrorCode::kBackendTransport);
}

TEST_CASE("backend keeps the first paragraph and caches responses") {
  MockServer server([](int, const httplib::Request&, httplib::Response& res) {
    Ok(res, "  first paragraph\n\nsecond paragraph");
  });
  HttpConfig c = server.Config();
  c.cache_dir = testing::TempDir("http_cache");
  HttpBackend backend(c);
  GenRequest r;
  r.kind = PromptKind::kQConnector;
  r.prompt = "same prompt";
  CHECK(backend.Generate(r) == "first paragraph");
  CHECK(backend.Generate(r) == "first paragraph");
  CHECK(server.requests() == 1);
  CHECK(backend.name() == "http:mock-model");

  HttpBackend fresh(c);
  CHECK(fresh.Generate(r) == "first paragraph");
  CHECK(server.requests() == 1);
}

TEST_CASE("minimum interval paces requests") {
  MockServer server([](int, const httplib::Request&, httplib::Response& res) { Ok(res, "x"); });
  HttpConfig c = server.Config();
  c.min_interval_s = 0.2;
  HttpBackend backend(c);
  GenRequest r;
  const auto start = Clock::now();
  for (int i = 0; i < 3; ++i) {
    r.prompt = "p" + std::to_string(i);
    backend.Generate(r);
  }
  CHECK(Seconds(start) >= 0.4);
}

}  // namespace
}  // namespace genret
