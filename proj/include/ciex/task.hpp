#pragma once

#include <string>

#include "ciex/errors.hpp"

namespace ciex {

// The five information-extraction tasks.
enum class Task { NER, RE, ED, EAE, EE };

enum class PromptMode { OneStage, TwoStageS1, TwoStageS2 };

inline std::string to_string(Task t) {
  switch (t) {
    case Task::NER: return "NER";
    case Task::RE: return "RE";
    case Task::ED: return "ED";
    case Task::EAE: return "EAE";
    case Task::EE: return "EE";
  }
  return "?";
}

inline std::string to_string(PromptMode m) {
  switch (m) {
    case PromptMode::OneStage: return "one_stage";
    case PromptMode::TwoStageS1: return "two_stage_s1";
    case PromptMode::TwoStageS2: return "two_stage_s2";
  }
  return "?";
}

inline Task task_from_string(const std::string& s) {
  if (s == "NER" || s == "ner") return Task::NER;
  if (s == "RE" || s == "re") return Task::RE;
  if (s == "ED" || s == "ed") return Task::ED;
  if (s == "EAE" || s == "eae") return Task::EAE;
  if (s == "EE" || s == "ee") return Task::EE;
  throw ConfigError("unknown task: " + s);
}

inline PromptMode prompt_mode_from_string(const std::string& s) {
  if (s == "one_stage") return PromptMode::OneStage;
  if (s == "two_stage_s1") return PromptMode::TwoStageS1;
  if (s == "two_stage_s2") return PromptMode::TwoStageS2;
  throw ConfigError("unknown prompt mode: " + s);
}

inline bool task_uses_entities(Task t) { return true; }
inline bool task_uses_relations(Task t) { return t == Task::RE; }
inline bool task_uses_events(Task t) {
  return t == Task::ED || t == Task::EAE || t == Task::EE;
}

// ED and EAE have no 2-stage prompt.
inline bool mode_valid_for_task(PromptMode m, Task t) {
  if (m == PromptMode::OneStage) return true;
  return t != Task::ED && t != Task::EAE;
}

}  // namespace ciex
