#pragma once

#include <string>
#include <vector>

#include "ciex/extraction.hpp"
#include "ciex/metrics.hpp"
#include "ciex/schema.hpp"

namespace ciex {

// JSONL corpus reader; every label must resolve in the schema.
std::vector<Example> load_split(const std::string& path, const Schema& schema);
std::vector<Example> parse_split(const std::string& jsonl_text,
                                 const Schema& schema);

std::string example_to_json_line(const Example& ex);
void save_split(const std::vector<Example>& examples, const std::string& path);

struct ExampleRecord {
  std::string example_id;
  std::vector<std::string> prompt_hashes;   // stage order
  std::vector<std::string> retrieved_ids;   // in-context examples used
  std::vector<std::string> response_hashes; // content refs under responses/
  ExtractionSet predicted;
  std::vector<std::string> diagnostics;
};

struct RunManifest {
  std::string run_id;
  std::string config_snapshot_json;
  std::vector<ExampleRecord> records;
  MetricsReport report;
  // Excluded from determinism comparisons.
  long long total_latency_ms = 0;

  std::string to_json(bool include_volatile = true) const;
};

// Content-addressed run directory: manifest.json plus one response file
// per distinct response hash. Idempotent for identical manifests.
std::string save_run(const RunManifest& manifest,
                     const std::map<std::string, std::string>& responses,
                     const std::string& root);

}  // namespace ciex
