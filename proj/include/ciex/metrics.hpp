#pragma once

#include <map>
#include <string>
#include <vector>

#include "ciex/extraction.hpp"
#include "ciex/task.hpp"

namespace ciex {

struct MetricCounts {
  long long correct = 0;
  long long predicted = 0;
  long long gold = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  Task task = Task::NER;
  MetricCounts overall;
  std::map<std::string, MetricCounts> per_type;

  std::string to_json() const;
  std::string to_table() const;
};

// Trim, collapse internal whitespace; case-sensitive.
std::string canonicalize_text(const std::string& s);

// Last token of the span after stripping trailing punctuation.
std::string head_word(const std::string& span);

// Micro P/R/F1 with the zero conventions; rounded to 4 decimals.
MetricCounts f1_from_counts(long long correct, long long predicted,
                            long long gold);

// Strict-match key for one extraction under a task. The first
// tab-separated field is the type (used for the per-type breakdown).
std::vector<std::string> match_keys(const ExtractionSet& s, Task task,
                                    bool head_mode);

// Micro-averaged strict match: per example, predictions and golds
// reduce to key multisets; correct = min-count intersection.
MetricsReport score(
    const std::vector<std::pair<std::string, ExtractionSet>>& predictions,
    const std::vector<std::pair<std::string, ExtractionSet>>& golds,
    Task task, bool head_mode = false);

}  // namespace ciex
