#include <doctest.h>

#include <filesystem>
#include <thread>

#include "ciex/errors.hpp"
#include "ciex/llm.hpp"

using namespace ciex;

namespace {

RenderedPrompt make_prompt(const std::string& text) {
  RenderedPrompt p;
  p.text = text;
  p.token_estimate = estimate_tokens(text);
  return p;
}

RetryPolicy fast_retry() {
  RetryPolicy r;
  r.base_delay_ms = 1;
  return r;
}

std::string fresh_cache_dir(const std::string& tag) {
  std::string dir = "/tmp/ciex_llm_cache_" + tag;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("request_hash is a pure function of its inputs") {
  ModelConfig c;
  std::string h1 = request_hash(c, "hello");
  CHECK(h1 == request_hash(c, "hello"));
  CHECK(h1.size() == 32);
  CHECK(h1 != request_hash(c, "hello!"));

  ModelConfig c2 = c;
  c2.temperature = 0.7;
  CHECK(h1 != request_hash(c2, "hello"));
  c2 = c;
  c2.model_name = "other";
  CHECK(h1 != request_hash(c2, "hello"));
  c2 = c;
  c2.max_output_tokens = 64;
  CHECK(h1 != request_hash(c2, "hello"));
}

TEST_CASE("mock provider scripting order: exact, substring, handler") {
  MockProvider mock;
  ModelConfig c;
  mock.script_exact("ping", "pong");
  mock.script_substring("ing", "sub");
  mock.set_handler([](const std::string&) { return "fallback"; });
  CHECK(mock.complete("ping", c) == "pong");
  CHECK(mock.complete("singing", c) == "sub");
  CHECK(mock.complete("other", c) == "fallback");
  CHECK(mock.invocations() == 3);

  MockProvider bare;
  CHECK_THROWS_AS(bare.complete("unscripted", c), ProviderError);
}

TEST_CASE("gateway returns provider output and counts invocations") {
  MockProvider mock;
  mock.script_exact("q", "a");
  LlmGateway gw(mock, nullptr, fast_retry());
  CompletionRecord rec = gw.complete(make_prompt("q"), ModelConfig{});
  CHECK(rec.response_text == "a");
  CHECK_FALSE(rec.cached);
  CHECK(rec.request_hash == request_hash(ModelConfig{}, "q"));
  CHECK(mock.invocations() == 1);
}

TEST_CASE("cache hit skips the provider entirely") {
  MockProvider mock;
  mock.script_exact("q", "a");
  ResponseCache cache(fresh_cache_dir("hit"));
  LlmGateway gw(mock, &cache, fast_retry());
  ModelConfig c;

  CompletionRecord first = gw.complete(make_prompt("q"), c);
  CHECK_FALSE(first.cached);
  CHECK(mock.invocations() == 1);

  CompletionRecord second = gw.complete(make_prompt("q"), c);
  CHECK(second.cached);
  CHECK(second.response_text == "a");
  CHECK(mock.invocations() == 1);  // no new provider call

  // a second gateway over the same directory also hits
  LlmGateway gw2(mock, &cache, fast_retry());
  CHECK(gw2.complete(make_prompt("q"), c).cached);
  CHECK(mock.invocations() == 1);
}

TEST_CASE("overlength prompt rejected before any provider call") {
  MockProvider mock;
  LlmGateway gw(mock, nullptr, fast_retry());
  ModelConfig c;
  c.context_window = 100;
  c.max_output_tokens = 90;
  RenderedPrompt p = make_prompt(std::string(100, 'x'));  // ~25 tokens
  CHECK_THROWS_AS(gw.complete(p, c), OverlengthError);
  CHECK(mock.invocations() == 0);
}

TEST_CASE("retryable failures are retried up to max_attempts") {
  MockProvider mock;
  int calls = 0;
  mock.set_handler([&](const std::string&) -> std::string {
    if (++calls < 3) throw ProviderError("rate limited", true);
    return "ok";
  });
  LlmGateway gw(mock, nullptr, fast_retry());
  CompletionRecord rec = gw.complete(make_prompt("q"), ModelConfig{});
  CHECK(rec.response_text == "ok");
  CHECK(calls == 3);
}

TEST_CASE("retry exhaustion surfaces the provider error") {
  MockProvider mock;
  int calls = 0;
  mock.set_handler([&](const std::string&) -> std::string {
    ++calls;
    throw ProviderError("still down", true);
  });
  RetryPolicy r = fast_retry();
  r.max_attempts = 3;
  LlmGateway gw(mock, nullptr, r);
  CHECK_THROWS_AS(gw.complete(make_prompt("q"), ModelConfig{}), ProviderError);
  CHECK(calls == 3);
}

TEST_CASE("terminal failures are not retried") {
  MockProvider mock;
  int calls = 0;
  mock.set_handler([&](const std::string&) -> std::string {
    ++calls;
    throw ProviderError("bad request", false);
  });
  LlmGateway gw(mock, nullptr, fast_retry());
  CHECK_THROWS_AS(gw.complete(make_prompt("q"), ModelConfig{}), ProviderError);
  CHECK(calls == 1);
}

TEST_CASE("failures are not cached") {
  MockProvider mock;
  bool fail = true;
  mock.set_handler([&](const std::string&) -> std::string {
    if (fail) throw ProviderError("oops", false);
    return "recovered";
  });
  ResponseCache cache(fresh_cache_dir("fail"));
  LlmGateway gw(mock, &cache, fast_retry());
  CHECK_THROWS_AS(gw.complete(make_prompt("q"), ModelConfig{}), ProviderError);
  fail = false;
  CompletionRecord rec = gw.complete(make_prompt("q"), ModelConfig{});
  CHECK_FALSE(rec.cached);
  CHECK(rec.response_text == "recovered");
}

TEST_CASE("concurrent completions stay bounded and correct") {
  MockProvider mock;
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  mock.set_handler([&](const std::string& p) {
    int now = ++active;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {}
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active;
    return "echo:" + p;
  });
  LlmGateway gw(mock, nullptr, fast_retry(), 2);
  std::vector<std::thread> workers;
  std::vector<std::string> results(8);
  for (int i = 0; i < 8; ++i)
    workers.emplace_back([&, i] {
      results[i] =
          gw.complete(make_prompt("p" + std::to_string(i)), ModelConfig{})
              .response_text;
    });
  for (auto& w : workers) w.join();
  CHECK(peak.load() <= 2);
  for (int i = 0; i < 8; ++i)
    CHECK(results[i] == "echo:p" + std::to_string(i));
}
