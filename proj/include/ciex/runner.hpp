#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ciex/dataset.hpp"
#include "ciex/llm.hpp"
#include "ciex/retrieval.hpp"

namespace ciex {

enum class PromptStyle { Code, TextBaseline };

struct RunConfig {
  Task task = Task::NER;
  std::string schema_path;
  std::string train_path;
  std::string test_path;
  std::string mode = "one_stage";  // one_stage | two_stage
  PromptStyle style = PromptStyle::Code;
  RetrievalStrategy strategy;
  int k = -1;  // -1 = per-task default
  ModelConfig model;
  std::string model_base_url;
  std::string credential_env_var;
  uint64_t seed = 0;
  std::string output_root = "runs";
  std::string cache_dir;
  std::string gazetteer_path;  // anony_sent_embed
  std::string index_path;      // optional persisted index
  std::string run_id;          // derived from config when empty
  int max_workers = 4;
  bool reselect_stage2 = false;

  static RunConfig from_json(const std::string& json_text);
  static RunConfig from_file(const std::string& path);
  std::string to_json() const;
  void validate() const;
  int effective_k() const;
};

// Offline provider that answers every prompt with the gold output of
// the test example quoted in the prompt's final instruction block.
class EchoGoldProvider : public CompletionProvider {
public:
  EchoGoldProvider(Schema schema, Task task, std::vector<Example> pool,
                   PromptStyle style = PromptStyle::Code);
  std::string complete(const std::string& prompt,
                       const ModelConfig& config) override;
  long long invocations() const { return invocations_.load(); }

private:
  Schema schema_;
  Task task_;
  std::vector<Example> pool_;
  PromptStyle style_;
  std::atomic<long long> invocations_{0};
};

std::unique_ptr<CompletionProvider> make_provider(const RunConfig& config,
                                                  const Schema& schema,
                                                  const std::vector<Example>& test);

// End-to-end: retrieve -> render -> complete -> parse -> score.
RunManifest run(const RunConfig& config, CompletionProvider& provider,
                ResponseCache* cache,
                std::map<std::string, std::string>* responses_out = nullptr);

// Renders the prompt(s) that run() would send for one test example.
std::vector<RenderedPrompt> render_prompts_for_example(
    const RunConfig& config, const std::string& example_id);

}  // namespace ciex
