#include "ciex/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ciex/errors.hpp"
#include "ciex/parser.hpp"

namespace ciex {

using nlohmann::json;

namespace {

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

int default_k(Task task) {
  switch (task) {
    case Task::NER: return 20;
    case Task::RE: return 12;
    default: return 10;  // event tasks
  }
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("run config is not valid JSON");
  RunConfig c;
  c.task = task_from_string(j.value("task", "NER"));
  c.schema_path = j.value("schema", "");
  c.train_path = j.value("train", "");
  c.test_path = j.value("test", "");
  c.mode = j.value("mode", "one_stage");
  const std::string style = j.value("style", "code");
  if (style == "code") c.style = PromptStyle::Code;
  else if (style == "text_baseline") c.style = PromptStyle::TextBaseline;
  else throw ConfigError("unknown prompt style: " + style);

  if (j.contains("strategy")) {
    const json& s = j.at("strategy");
    c.strategy.kind = strategy_kind_from_string(s.value("kind", "sent_embed"));
    if (s.contains("seed")) c.strategy.seed = s.at("seed").get<uint64_t>();
    if (s.contains("fixed_ids"))
      c.strategy.fixed_ids = s.at("fixed_ids").get<std::vector<std::string>>();
  }
  c.k = j.value("k", -1);
  if (j.contains("model")) {
    const json& m = j.at("model");
    c.model.provider_id = m.value("provider", "echo");
    c.model.model_name = m.value("model_name", "mock-model");
    c.model.temperature = m.value("temperature", 0.0);
    c.model.max_output_tokens = m.value("max_output_tokens", 512);
    c.model.context_window = m.value("context_window", 16384);
    c.model_base_url = m.value("base_url", "");
    c.credential_env_var = m.value("credential_env", "");
  }
  c.seed = j.value("seed", 0);
  c.output_root = j.value("output_root", "runs");
  c.cache_dir = j.value("cache_dir", "");
  c.gazetteer_path = j.value("gazetteer", "");
  c.index_path = j.value("index_path", "");
  c.run_id = j.value("run_id", "");
  c.max_workers = j.value("max_workers", 4);
  c.reselect_stage2 = j.value("reselect_stage2", false);
  c.validate();
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string RunConfig::to_json() const {
  json s = {{"kind", ciex::to_string(strategy.kind)}};
  if (strategy.seed) s["seed"] = *strategy.seed;
  if (strategy.fixed_ids) s["fixed_ids"] = *strategy.fixed_ids;
  json j = {
      {"task", ciex::to_string(task)},
      {"schema", schema_path},
      {"train", train_path},
      {"test", test_path},
      {"mode", mode},
      {"style", style == PromptStyle::Code ? "code" : "text_baseline"},
      {"strategy", s},
      {"k", k},
      {"model",
       {{"provider", model.provider_id},
        {"model_name", model.model_name},
        {"temperature", model.temperature},
        {"max_output_tokens", model.max_output_tokens},
        {"context_window", model.context_window},
        {"base_url", model_base_url},
        {"credential_env", credential_env_var}}},
      {"seed", seed},
      {"output_root", output_root},
      {"cache_dir", cache_dir},
      {"gazetteer", gazetteer_path},
      {"index_path", index_path},
      {"max_workers", max_workers},
      {"reselect_stage2", reselect_stage2},
  };
  return j.dump(2);
}

void RunConfig::validate() const {
  if (mode != "one_stage" && mode != "two_stage")
    throw ConfigError("mode must be one_stage or two_stage");
  if (mode == "two_stage" && (task == Task::ED || task == Task::EAE))
    throw ConfigError("task " + ciex::to_string(task) +
                      " has no 2-stage prompt");
  if (mode == "two_stage" && style == PromptStyle::TextBaseline)
    throw ConfigError("text baseline supports one_stage only");
  strategy.validate();
  if (strategy.kind == StrategyKind::AnonySentEmbed && gazetteer_path.empty())
    throw ConfigError("anony_sent_embed requires a gazetteer file");
  if (model.max_output_tokens <= 0 || model.context_window <= 0)
    throw ConfigError("model token limits must be positive");
  if (model.context_window <= model.max_output_tokens)
    throw ConfigError("context_window must exceed max_output_tokens");
}

int RunConfig::effective_k() const { return k >= 0 ? k : default_k(task); }

EchoGoldProvider::EchoGoldProvider(Schema schema, Task task,
                                   std::vector<Example> pool, PromptStyle style)
    : schema_(std::move(schema)),
      task_(task),
      pool_(std::move(pool)),
      style_(style) {}

std::string EchoGoldProvider::complete(const std::string& prompt,
                                       const ModelConfig&) {
  ++invocations_;
  const std::string prefix =
      style_ == PromptStyle::Code ? "sentence: " : "Sentence: ";
  const Example* target = nullptr;
  size_t best_pos = 0;
  for (const auto& ex : pool_) {
    const std::string needle = prefix + quote_dialect_string(ex.text);
    size_t pos = prompt.rfind(needle);
    if (pos != std::string::npos && (!target || pos > best_pos)) {
      target = &ex;
      best_pos = pos;
    }
  }
  if (!target) return "";

  if (prompt.size() >= 7 && prompt.rfind("import ") == prompt.size() - 7) {
    // Stage 1: answer with the completion suffix.
    std::vector<std::string> types;
    std::set<std::string> seen;
    auto add = [&](const std::string& label) {
      auto ref = try_resolve_alias(schema_, label);
      std::string name = ref ? ref->name : label;
      if (seen.insert(name).second) types.push_back(name);
    };
    if (task_ == Task::NER)
      for (const auto& e : target->gold.entities) add(e.type);
    else if (task_ == Task::RE)
      for (const auto& r : target->gold.relations) add(r.type);
    else
      for (const auto& ev : target->gold.events) add(ev.type);
    std::string out;
    for (size_t i = 0; i < types.size(); ++i) {
      if (i) out += ", ";
      out += types[i];
    }
    return out;
  }
  if (style_ == PromptStyle::TextBaseline)
    return render_text_baseline_answer(target->gold, task_);
  return render_instances(target->gold, schema_, task_);
}

namespace {

// Always-empty provider (the F1 = 0 baseline of the echo experiments).
class EmptyProvider : public CompletionProvider {
public:
  std::string complete(const std::string&, const ModelConfig&) override {
    return "";
  }
};

}  // namespace

std::unique_ptr<CompletionProvider> make_provider(
    const RunConfig& config, const Schema& schema,
    const std::vector<Example>& test) {
  const std::string& id = config.model.provider_id;
  if (id == "echo")
    return std::make_unique<EchoGoldProvider>(schema, config.task, test,
                                              config.style);
  if (id == "empty") return std::make_unique<EmptyProvider>();
  if (id == "openai") {
    if (config.model_base_url.empty())
      throw ConfigError("openai provider requires model.base_url");
    return std::make_unique<OpenAiChatProvider>(config.model_base_url,
                                                config.credential_env_var);
  }
  throw ConfigError("unknown provider: " + id);
}

namespace {

struct RunContext {
  const RunConfig& config;
  Schema schema;
  std::vector<Example> train;
  std::vector<Example> test;
  std::map<std::string, const Example*> train_by_id;
  ExampleIndex index;
  std::map<std::string, std::vector<std::string>> type_pools;
  std::unique_ptr<GazetteerAnnotator> annotator;
  HashingEmbedder embedder;
};

bool strategy_needs_embeddings(StrategyKind kind) {
  return kind == StrategyKind::SentEmbed || kind == StrategyKind::AnonySentEmbed;
}

// The family whose types stage 1 identifies / semi_random cycles over.
std::vector<std::string> family_labels(const Example& ex, Task task) {
  std::vector<std::string> out;
  if (task == Task::NER)
    for (const auto& e : ex.gold.entities) out.push_back(e.type);
  else if (task == Task::RE)
    for (const auto& r : ex.gold.relations) out.push_back(r.type);
  else
    for (const auto& ev : ex.gold.events) out.push_back(ev.type);
  return out;
}

RunContext build_context(const RunConfig& config) {
  config.validate();
  RunContext ctx{config};
  ctx.schema = load_schema_file(config.schema_path);
  ctx.train = load_split(config.train_path, ctx.schema);
  ctx.test = load_split(config.test_path, ctx.schema);
  for (const auto& ex : ctx.train) ctx.train_by_id[ex.id] = &ex;

  if (!config.gazetteer_path.empty())
    ctx.annotator = std::make_unique<GazetteerAnnotator>(
        GazetteerAnnotator::from_json_file(config.gazetteer_path));

  if (strategy_needs_embeddings(config.strategy.kind)) {
    const bool anonymized =
        config.strategy.kind == StrategyKind::AnonySentEmbed;
    bool loaded = false;
    if (!config.index_path.empty() &&
        std::filesystem::exists(config.index_path)) {
      ctx.index = load_index(config.index_path);
      loaded = ctx.index.anonymized == anonymized &&
               ctx.index.embedder_id == ctx.embedder.id();
    }
    if (!loaded) {
      ctx.index = build_index(ctx.train, ctx.embedder,
                              anonymized ? ctx.annotator.get() : nullptr);
      if (!config.index_path.empty()) save_index(ctx.index, config.index_path);
    }
  } else {
    // Strategies that never look at vectors still draw ids from the index.
    ctx.index.embedder_id = "none";
    for (const auto& ex : ctx.train) ctx.index.entries.push_back({ex.id, {}});
  }

  if (config.strategy.kind == StrategyKind::SemiRandom) {
    for (const auto& ex : ctx.train) {
      std::set<std::string> seen;
      for (const auto& label : family_labels(ex, config.task)) {
        auto ref = try_resolve_alias(ctx.schema, label);
        const std::string name = ref ? ref->name : label;
        if (seen.insert(name).second) ctx.type_pools[name].push_back(ex.id);
      }
    }
  }
  return ctx;
}

std::vector<Example> gather_examples(const RunContext& ctx,
                                     const std::vector<std::string>& ids) {
  std::vector<Example> out;
  for (const auto& id : ids) {
    auto it = ctx.train_by_id.find(id);
    if (it != ctx.train_by_id.end()) out.push_back(*it->second);
  }
  return out;
}

void append_diags(ExampleRecord& rec, const ParseDiagnostics& diags) {
  for (const auto& [line, reason] : diags.skipped_lines)
    rec.diagnostics.push_back("skipped line " + std::to_string(line) + ": " +
                              reason);
  for (const auto& [line, reason] : diags.bind_errors)
    rec.diagnostics.push_back("bind: " + reason);
}

ExampleRecord process_example(RunContext& ctx, const Example& ex,
                              LlmGateway& gateway,
                              std::map<std::string, std::string>& responses,
                              std::mutex& responses_mutex) {
  const RunConfig& config = ctx.config;
  ExampleRecord rec;
  rec.example_id = ex.id;

  try {
    std::vector<std::string> ids = retrieve(
        ctx.index, ex.text, config.effective_k(), config.strategy, ctx.embedder,
        ctx.annotator.get(), ex.id,
        ctx.type_pools.empty() ? nullptr : &ctx.type_pools);
    rec.retrieved_ids = ids;
    std::vector<Example> shots = gather_examples(ctx, ids);

    PromptSpec spec;
    spec.task = config.task;
    spec.k = static_cast<int>(shots.size());
    spec.max_tokens = config.model.context_window - config.model.max_output_tokens;
    if (config.task == Task::EAE) {
      if (ex.gold.events.empty()) {
        rec.diagnostics.push_back("no given event type; skipped");
        return rec;
      }
      spec.given_event_type = ex.gold.events.front().type;
    }

    auto run_completion = [&](const RenderedPrompt& prompt) {
      CompletionRecord completion = gateway.complete(prompt, config.model);
      rec.prompt_hashes.push_back(completion.request_hash);
      rec.response_hashes.push_back(completion.request_hash);
      {
        std::lock_guard lock(responses_mutex);
        responses[completion.request_hash] = completion.response_text;
      }
      return completion.response_text;
    };

    if (config.style == PromptStyle::TextBaseline) {
      spec.mode = PromptMode::OneStage;
      RenderedPrompt prompt =
          render_text_baseline_prompt(spec, ctx.schema, shots, ex.text);
      rec.retrieved_ids = prompt.example_ids;
      std::string response = run_completion(prompt);
      rec.predicted =
          parse_text_baseline_response(response, ctx.schema, config.task);
    } else if (config.mode == "one_stage") {
      spec.mode = PromptMode::OneStage;
      RenderedPrompt prompt = render_prompt(spec, ctx.schema, shots, ex.text);
      rec.retrieved_ids = prompt.example_ids;
      std::string response = run_completion(prompt);
      auto [ast, parse_diags] =
          parse_program(extract_code_region(response));
      auto [predicted, bind_diags] = bind(ast, ctx.schema, config.task);
      rec.predicted = std::move(predicted);
      append_diags(rec, parse_diags);
      append_diags(rec, bind_diags);
    } else {
      spec.mode = PromptMode::TwoStageS1;
      RenderedPrompt s1 = render_prompt(spec, ctx.schema, shots, ex.text);
      rec.retrieved_ids = s1.example_ids;
      std::string s1_response = run_completion(s1);
      auto [types, s1_diags] = parse_import_completion(s1_response, ctx.schema);
      append_diags(rec, s1_diags);
      if (types.empty()) {
        rec.diagnostics.push_back("stage 1 identified no types; stage 2 skipped");
      } else {
        if (config.reselect_stage2) {
          std::vector<std::string> ids2 = retrieve(
              ctx.index, ex.text, config.effective_k(), config.strategy,
              ctx.embedder, ctx.annotator.get(), ex.id,
              ctx.type_pools.empty() ? nullptr : &ctx.type_pools);
          shots = gather_examples(ctx, ids2);
        }
        spec.mode = PromptMode::TwoStageS2;
        RenderedPrompt s2 =
            render_prompt(spec, ctx.schema, shots, ex.text, types);
        std::string s2_response = run_completion(s2);
        auto [ast, parse_diags] =
            parse_program(extract_code_region(s2_response));
        auto [predicted, bind_diags] = bind(ast, ctx.schema, config.task);
        rec.predicted = std::move(predicted);
        append_diags(rec, parse_diags);
        append_diags(rec, bind_diags);
      }
    }
  } catch (const OverlengthError& e) {
    rec.diagnostics.push_back(std::string("overlength: ") + e.what());
  } catch (const ProviderError& e) {
    rec.diagnostics.push_back(std::string("provider: ") + e.what());
  }

  if (rec.predicted.empty()) rec.diagnostics.push_back("no extractions");
  return rec;
}

}  // namespace

RunManifest run(const RunConfig& config, CompletionProvider& provider,
                ResponseCache* cache,
                std::map<std::string, std::string>* responses_out) {
  RunContext ctx = build_context(config);
  LlmGateway gateway(provider, cache, {}, config.max_workers);

  std::vector<ExampleRecord> records(ctx.test.size());
  std::map<std::string, std::string> responses;
  std::mutex responses_mutex;
  std::atomic<size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= ctx.test.size()) break;
      try {
        records[i] = process_example(ctx, ctx.test[i], gateway, responses,
                                     responses_mutex);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::max(
      1, std::min<int>(config.max_workers, static_cast<int>(ctx.test.size())));
  std::vector<std::thread> threads;
  for (int i = 0; i < workers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<std::pair<std::string, ExtractionSet>> predictions, golds;
  for (size_t i = 0; i < ctx.test.size(); ++i) {
    predictions.emplace_back(ctx.test[i].id, records[i].predicted);
    golds.emplace_back(ctx.test[i].id, ctx.test[i].gold);
  }

  RunManifest manifest;
  manifest.config_snapshot_json = config.to_json();
  manifest.run_id = config.run_id.empty()
                        ? "run-" + hex64(fnv1a64(manifest.config_snapshot_json))
                        : config.run_id;
  manifest.records = std::move(records);
  manifest.report = score(predictions, golds, config.task);
  if (responses_out) *responses_out = responses;
  return manifest;
}

std::vector<RenderedPrompt> render_prompts_for_example(
    const RunConfig& config, const std::string& example_id) {
  RunContext ctx = build_context(config);
  const Example* target = nullptr;
  for (const auto& ex : ctx.test)
    if (ex.id == example_id) target = &ex;
  if (!target) throw InputError("unknown test example id " + example_id);

  std::vector<std::string> ids = retrieve(
      ctx.index, target->text, config.effective_k(), config.strategy,
      ctx.embedder, ctx.annotator.get(), target->id,
      ctx.type_pools.empty() ? nullptr : &ctx.type_pools);
  std::vector<Example> shots = gather_examples(ctx, ids);

  PromptSpec spec;
  spec.task = config.task;
  spec.k = static_cast<int>(shots.size());
  spec.max_tokens = config.model.context_window - config.model.max_output_tokens;
  if (config.task == Task::EAE) {
    if (target->gold.events.empty())
      throw InputError("example " + example_id + " carries no event type");
    spec.given_event_type = target->gold.events.front().type;
  }

  std::vector<RenderedPrompt> out;
  if (config.style == PromptStyle::TextBaseline) {
    spec.mode = PromptMode::OneStage;
    out.push_back(
        render_text_baseline_prompt(spec, ctx.schema, shots, target->text));
    return out;
  }
  if (config.mode == "one_stage") {
    spec.mode = PromptMode::OneStage;
    out.push_back(render_prompt(spec, ctx.schema, shots, target->text));
    return out;
  }
  spec.mode = PromptMode::TwoStageS1;
  out.push_back(render_prompt(spec, ctx.schema, shots, target->text));
  // Stage 2 is previewed with the target's gold family types standing in
  // for the stage-1 completion.
  std::vector<std::string> types;
  std::set<std::string> seen;
  for (const auto& label : family_labels(*target, config.task)) {
    auto ref = try_resolve_alias(ctx.schema, label);
    const std::string name = ref ? ref->name : label;
    if (seen.insert(name).second) types.push_back(name);
  }
  if (!types.empty()) {
    spec.mode = PromptMode::TwoStageS2;
    out.push_back(render_prompt(spec, ctx.schema, shots, target->text, types));
  }
  return out;
}

}  // namespace ciex
