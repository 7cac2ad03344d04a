#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ciex/extraction.hpp"
#include "ciex/schema.hpp"
#include "ciex/task.hpp"

namespace ciex {

struct SchemaCode {
  std::string text;
  std::vector<std::string> covered_types;  // class names minus bases
};

struct PromptSpec {
  Task task = Task::NER;
  PromptMode mode = PromptMode::OneStage;
  int k = 0;
  int max_tokens = 4000;
  std::optional<std::string> given_event_type;  // EAE only

  void validate() const;
};

struct RenderedPrompt {
  std::string text;
  int token_estimate = 0;
  std::vector<std::string> example_ids;  // survivors, rank order
  PromptMode mode = PromptMode::OneStage;
};

// Deterministic budget estimator: ceil(bytes / 4).
int estimate_tokens(const std::string& text);

// Base + subclass definitions for every type family the task needs.
SchemaCode render_class_defs(const Schema& schema, Task task);

// One assignment per extraction (entities, relations, events; input
// order within each family), variables named v1, v2, ... Output parses
// and binds back to the input set.
std::string render_instances(const ExtractionSet& extractions,
                             const Schema& schema, Task task);

// Triple-quoted task instruction quoting the sentence verbatim.
std::string render_instruction(const std::string& sentence, Task task,
                               PromptMode mode,
                               const std::optional<std::string>& given_event_type =
                                   std::nullopt);

// Assembles the full prompt. Examples must be ranked best-first; worst
// ranked are dropped first when the token budget overflows. Throws
// OverlengthError if even the zero-example prompt exceeds the budget.
RenderedPrompt render_prompt(
    const PromptSpec& spec, const Schema& schema,
    const std::vector<Example>& examples, const std::string& target,
    const std::optional<std::vector<std::string>>& stage1_types = std::nullopt);

// Prose-style baseline prompt; answers are parsed by
// parse_text_baseline_response.
RenderedPrompt render_text_baseline_prompt(const PromptSpec& spec,
                                           const Schema& schema,
                                           const std::vector<Example>& examples,
                                           const std::string& target);

// "Type: mention" line reader for the text baseline.
ExtractionSet parse_text_baseline_response(const std::string& response,
                                           const Schema& schema, Task task);

// Gold answer block in the baseline's line format.
std::string render_text_baseline_answer(const ExtractionSet& gold, Task task);

}  // namespace ciex
