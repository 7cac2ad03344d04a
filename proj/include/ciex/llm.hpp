#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "ciex/render.hpp"

namespace ciex {

struct ModelConfig {
  std::string provider_id = "mock";
  std::string model_name = "mock-model";
  double temperature = 0.0;
  int max_output_tokens = 512;
  int context_window = 16384;
};

struct CompletionRecord {
  std::string request_hash;
  std::string response_text;
  long long latency_ms = 0;
  bool cached = false;
};

// Pure function of provider, model, decoding params, and prompt text.
std::string request_hash(const ModelConfig& config, const std::string& prompt);

class CompletionProvider {
public:
  virtual ~CompletionProvider() = default;
  virtual std::string complete(const std::string& prompt,
                               const ModelConfig& config) = 0;
};

// Scripted provider for tests. Responses are looked up by exact prompt
// text, then by substring, then fall through to the handler (if any).
class MockProvider : public CompletionProvider {
public:
  void script_exact(std::string prompt, std::string response);
  void script_substring(std::string needle, std::string response);
  void set_handler(std::function<std::string(const std::string&)> handler);
  std::string complete(const std::string& prompt,
                       const ModelConfig& config) override;
  long long invocations() const { return invocations_.load(); }
  void reset_invocations() { invocations_ = 0; }

private:
  std::map<std::string, std::string> exact_;
  std::vector<std::pair<std::string, std::string>> substrings_;
  std::function<std::string(const std::string&)> handler_;
  std::atomic<long long> invocations_{0};
};

// Chat-style HTTP provider: the prompt goes out as a single user
// message with an empty system message.
class OpenAiChatProvider : public CompletionProvider {
public:
  OpenAiChatProvider(std::string base_url, std::string credential_env_var);
  std::string complete(const std::string& prompt,
                       const ModelConfig& config) override;

private:
  std::string base_url_;
  std::string credential_env_var_;
};

// On-disk response cache, one JSON file per request hash.
class ResponseCache {
public:
  explicit ResponseCache(std::string directory);
  std::optional<std::string> get(const std::string& hash);
  void put(const std::string& hash, const ModelConfig& config,
           const std::string& prompt, const std::string& response);

private:
  std::string directory_;
  std::mutex mutex_;
};

struct RetryPolicy {
  int max_attempts = 5;
  long long base_delay_ms = 1000;
  double factor = 2.0;
  double jitter = 0.2;  // +-20%
};

// Cache-first completion with bounded concurrency and retry on
// transient provider failures.
class LlmGateway {
public:
  LlmGateway(CompletionProvider& provider, ResponseCache* cache,
             RetryPolicy retry = {}, int max_in_flight = 4);

  CompletionRecord complete(const RenderedPrompt& prompt,
                            const ModelConfig& config);

private:
  CompletionProvider& provider_;
  ResponseCache* cache_;
  RetryPolicy retry_;
  int max_in_flight_;
  int in_flight_ = 0;
  std::mutex mutex_;
  std::condition_variable slot_free_;
};

}  // namespace ciex
