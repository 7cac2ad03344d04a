#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ciex/dataset.hpp"
#include "ciex/errors.hpp"
#include "ciex/llm.hpp"
#include "ciex/metrics.hpp"
#include "ciex/runner.hpp"
#include "ciex/schema.hpp"

namespace {

using nlohmann::json;

int fail(const std::string& kind, const std::string& message, bool json_out) {
  if (json_out) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
  } else {
    std::cerr << "error (" << kind << "): " << message << "\n";
  }
  return 1;
}

template <typename Fn>
int guarded(bool json_out, Fn&& fn) {
  try {
    return fn();
  } catch (const ciex::FormatError& e) {
    return fail("format", e.what(), json_out);
  } catch (const ciex::ValidationError& e) {
    return fail("validation", e.what(), json_out);
  } catch (const ciex::ConfigError& e) {
    return fail("config", e.what(), json_out);
  } catch (const ciex::OverlengthError& e) {
    return fail("overlength", e.what(), json_out);
  } catch (const ciex::ProviderError& e) {
    return fail("provider", e.what(), json_out);
  } catch (const ciex::IoError& e) {
    return fail("io", e.what(), json_out);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), json_out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Code-style universal information extraction pipeline"};
  app.require_subcommand(1);
  bool json_out = false;
  app.add_flag("--json", json_out, "machine-readable errors/output");

  // schema validate <file>
  auto* schema_cmd = app.add_subcommand("schema", "schema file tools");
  auto* schema_validate = schema_cmd->add_subcommand("validate", "validate a schema file");
  std::string schema_file;
  schema_validate->add_option("file", schema_file, "schema JSON file")->required();

  // prompt render --config <file> --example <id>
  auto* prompt_cmd = app.add_subcommand("prompt", "prompt tools");
  auto* prompt_render = prompt_cmd->add_subcommand("render", "print the prompt(s) for one test example");
  std::string pr_config, pr_example;
  prompt_render->add_option("--config", pr_config, "run config JSON")->required();
  prompt_render->add_option("--example", pr_example, "test example id")->required();

  // index build --config <file>
  auto* index_cmd = app.add_subcommand("index", "example index tools");
  auto* index_build = index_cmd->add_subcommand("build", "build and persist the example index");
  std::string ib_config;
  index_build->add_option("--config", ib_config, "run config JSON")->required();

  // run --config <file>
  auto* run_cmd = app.add_subcommand("run", "execute an end-to-end experiment");
  std::string run_config;
  run_cmd->add_option("--config", run_config, "run config JSON")->required();

  // score --pred ... --gold ... --task ... [--head]
  auto* score_cmd = app.add_subcommand("score", "standalone scoring");
  std::string sc_pred, sc_gold, sc_task, sc_schema;
  bool sc_head = false;
  score_cmd->add_option("--pred", sc_pred, "predictions JSONL")->required();
  score_cmd->add_option("--gold", sc_gold, "gold JSONL")->required();
  score_cmd->add_option("--task", sc_task, "NER|RE|ED|EAE|EE")->required();
  score_cmd->add_option("--schema", sc_schema, "schema JSON file")->required();
  score_cmd->add_flag("--head", sc_head, "argument-head matching (EAE)");

  CLI11_PARSE(app, argc, argv);

  if (schema_validate->parsed()) {
    return guarded(json_out, [&] {
      ciex::Schema schema = ciex::load_schema_file(schema_file);
      if (json_out) {
        std::cout << json{{"ok", true},
                          {"dataset", schema.dataset_name},
                          {"entities", schema.entity_types.size()},
                          {"relations", schema.relation_types.size()},
                          {"events", schema.event_types.size()}}
                         .dump()
                  << "\n";
      } else {
        std::cout << "ok: " << schema.dataset_name << " ("
                  << schema.entity_types.size() << " entity, "
                  << schema.relation_types.size() << " relation, "
                  << schema.event_types.size() << " event types)\n";
      }
      return 0;
    });
  }

  if (prompt_render->parsed()) {
    return guarded(json_out, [&] {
      auto config = ciex::RunConfig::from_file(pr_config);
      auto prompts = ciex::render_prompts_for_example(config, pr_example);
      for (size_t i = 0; i < prompts.size(); ++i) {
        if (i) std::cout << "\n===== stage " << (i + 1) << " =====\n";
        std::cout << prompts[i].text;
      }
      return 0;
    });
  }

  if (index_build->parsed()) {
    return guarded(json_out, [&] {
      auto config = ciex::RunConfig::from_file(ib_config);
      if (config.index_path.empty())
        throw ciex::ConfigError("config has no index_path");
      ciex::Schema schema = ciex::load_schema_file(config.schema_path);
      auto train = ciex::load_split(config.train_path, schema);
      ciex::HashingEmbedder embedder;
      std::unique_ptr<ciex::GazetteerAnnotator> annotator;
      if (config.strategy.kind == ciex::StrategyKind::AnonySentEmbed)
        annotator = std::make_unique<ciex::GazetteerAnnotator>(
            ciex::GazetteerAnnotator::from_json_file(config.gazetteer_path));
      auto index = ciex::build_index(train, embedder, annotator.get());
      ciex::save_index(index, config.index_path);
      std::cout << "index written: " << config.index_path << " ("
                << index.entries.size() << " entries, dim " << index.dimension
                << ")\n";
      return 0;
    });
  }

  if (run_cmd->parsed()) {
    return guarded(json_out, [&] {
      auto config = ciex::RunConfig::from_file(run_config);
      ciex::Schema schema = ciex::load_schema_file(config.schema_path);
      auto test = ciex::load_split(config.test_path, schema);
      auto provider = ciex::make_provider(config, schema, test);
      std::unique_ptr<ciex::ResponseCache> cache;
      if (!config.cache_dir.empty())
        cache = std::make_unique<ciex::ResponseCache>(config.cache_dir);
      std::map<std::string, std::string> responses;
      ciex::RunManifest manifest =
          ciex::run(config, *provider, cache.get(), &responses);
      std::string dir = ciex::save_run(manifest, responses, config.output_root);
      if (json_out) {
        std::cout << json{{"run_dir", dir},
                          {"metrics", json::parse(manifest.report.to_json())}}
                         .dump()
                  << "\n";
      } else {
        std::cout << manifest.report.to_table();
        std::cout << "run directory: " << dir << "\n";
      }
      return 0;
    });
  }

  if (score_cmd->parsed()) {
    return guarded(json_out, [&] {
      ciex::Task task = ciex::task_from_string(sc_task);
      ciex::Schema schema = ciex::load_schema_file(sc_schema);
      auto pred = ciex::load_split(sc_pred, schema);
      auto gold = ciex::load_split(sc_gold, schema);
      std::vector<std::pair<std::string, ciex::ExtractionSet>> p, g;
      for (const auto& ex : pred) p.emplace_back(ex.id, ex.gold);
      for (const auto& ex : gold) g.emplace_back(ex.id, ex.gold);
      ciex::MetricsReport report = ciex::score(p, g, task, sc_head);
      std::cout << (json_out ? report.to_json() + "\n" : report.to_table());
      return 0;
    });
  }

  return 0;
}
