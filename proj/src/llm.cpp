#include "ciex/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ciex/errors.hpp"

namespace ciex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t fnv1a64(const std::string& s, uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setfill('0') << std::setw(16) << v;
  return out.str();
}

}  // namespace

std::string request_hash(const ModelConfig& config, const std::string& prompt) {
  std::ostringstream canon;
  canon << config.provider_id << '\x1f' << config.model_name << '\x1f'
        << config.temperature << '\x1f' << config.max_output_tokens << '\x1f'
        << prompt;
  const std::string s = canon.str();
  // Two independent FNV streams give a 128-bit key.
  return hex64(fnv1a64(s, 1469598103934665603ULL)) +
         hex64(fnv1a64(s, 0x9e3779b97f4a7c15ULL));
}

void MockProvider::script_exact(std::string prompt, std::string response) {
  exact_[std::move(prompt)] = std::move(response);
}

void MockProvider::script_substring(std::string needle, std::string response) {
  substrings_.emplace_back(std::move(needle), std::move(response));
}

void MockProvider::set_handler(
    std::function<std::string(const std::string&)> handler) {
  handler_ = std::move(handler);
}

std::string MockProvider::complete(const std::string& prompt,
                                   const ModelConfig&) {
  ++invocations_;
  auto it = exact_.find(prompt);
  if (it != exact_.end()) return it->second;
  for (const auto& [needle, response] : substrings_)
    if (prompt.find(needle) != std::string::npos) return response;
  if (handler_) return handler_(prompt);
  throw ProviderError("mock provider has no script for this prompt", false);
}

OpenAiChatProvider::OpenAiChatProvider(std::string base_url,
                                       std::string credential_env_var)
    : base_url_(std::move(base_url)),
      credential_env_var_(std::move(credential_env_var)) {}

std::string OpenAiChatProvider::complete(const std::string& prompt,
                                         const ModelConfig& config) {
  httplib::Client client(base_url_);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!credential_env_var_.empty()) {
    const char* cred = std::getenv(credential_env_var_.c_str());
    if (!cred)
      throw ProviderError("credential env var not set: " + credential_env_var_,
                          false);
    headers.emplace("Authorization", std::string("Bearer ") + cred);
  }
  json body = {
      {"model", config.model_name},
      {"temperature", config.temperature},
      {"max_tokens", config.max_output_tokens},
      {"messages",
       {{{"role", "system"}, {"content", ""}},
        {{"role", "user"}, {"content", prompt}}}},
  };
  auto res = client.Post("/v1/chat/completions", headers, body.dump(),
                         "application/json");
  if (!res) throw ProviderError("completion endpoint unreachable", true);
  if (res->status == 429 || res->status >= 500)
    throw ProviderError("transient provider status " +
                            std::to_string(res->status),
                        true);
  if (res->status != 200)
    throw ProviderError("provider status " + std::to_string(res->status),
                        false);
  json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("choices") ||
      parsed["choices"].empty())
    throw ProviderError("malformed completion response", false);
  const auto& choice = parsed["choices"][0];
  if (choice.contains("message"))
    return choice["message"].value("content", "");
  return choice.value("text", "");
}

ResponseCache::ResponseCache(std::string directory)
    : directory_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(directory_, ec);
  if (ec) throw IoError("cannot create cache directory: " + directory_);
}

std::optional<std::string> ResponseCache::get(const std::string& hash) {
  std::lock_guard lock(mutex_);
  const fs::path path = fs::path(directory_) / (hash + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.contains("response")) return std::nullopt;
  return doc["response"].get<std::string>();
}

void ResponseCache::put(const std::string& hash, const ModelConfig& config,
                        const std::string& prompt, const std::string& response) {
  std::lock_guard lock(mutex_);
  json doc = {{"request_hash", hash},
              {"provider_id", config.provider_id},
              {"model_name", config.model_name},
              {"temperature", config.temperature},
              {"max_output_tokens", config.max_output_tokens},
              {"prompt", prompt},
              {"response", response}};
  const fs::path path = fs::path(directory_) / (hash + ".json");
  const fs::path tmp = fs::path(directory_) / (hash + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write cache file: " + tmp.string());
    out << doc.dump(2);
  }
  fs::rename(tmp, path);
}

LlmGateway::LlmGateway(CompletionProvider& provider, ResponseCache* cache,
                       RetryPolicy retry, int max_in_flight)
    : provider_(provider),
      cache_(cache),
      retry_(retry),
      max_in_flight_(max_in_flight > 0 ? max_in_flight : 1) {}

CompletionRecord LlmGateway::complete(const RenderedPrompt& prompt,
                                      const ModelConfig& config) {
  if (prompt.token_estimate + config.max_output_tokens > config.context_window)
    throw OverlengthError("prompt (" + std::to_string(prompt.token_estimate) +
                          " tokens) plus output budget exceeds context window");

  CompletionRecord record;
  record.request_hash = request_hash(config, prompt.text);
  if (cache_) {
    if (auto hit = cache_->get(record.request_hash)) {
      record.response_text = *hit;
      record.cached = true;
      return record;
    }
  }

  {
    std::unique_lock lock(mutex_);
    slot_free_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
    ++in_flight_;
  }
  const auto started = std::chrono::steady_clock::now();
  std::string response;
  std::exception_ptr failure;
  std::mt19937_64 jitter_rng(std::random_device{}());
  try {
    long long delay = retry_.base_delay_ms;
    for (int attempt = 1;; ++attempt) {
      try {
        response = provider_.complete(prompt.text, config);
        break;
      } catch (const ProviderError& e) {
        if (!e.retryable() || attempt >= retry_.max_attempts) throw;
        std::uniform_real_distribution<double> spread(1.0 - retry_.jitter,
                                                      1.0 + retry_.jitter);
        auto sleep_ms =
            static_cast<long long>(static_cast<double>(delay) * spread(jitter_rng));
        if (sleep_ms > 0)
          std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
        delay = static_cast<long long>(static_cast<double>(delay) * retry_.factor);
      }
    }
  } catch (...) {
    failure = std::current_exception();
  }
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  slot_free_.notify_one();
  if (failure) std::rethrow_exception(failure);

  record.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - started)
                          .count();
  record.response_text = response;
  if (cache_) cache_->put(record.request_hash, config, prompt.text, response);
  return record;
}

}  // namespace ciex
