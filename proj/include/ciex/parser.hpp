#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ciex/extraction.hpp"
#include "ciex/schema.hpp"
#include "ciex/task.hpp"

namespace ciex {

// AST of the class-instantiation dialect. Values are strings, lists,
// nested constructor calls, or references to earlier variables.
struct DialectCall;

struct DialectValue {
  enum class Kind { String, List, Call, VarRef };
  Kind kind = Kind::String;
  std::string string_value;                 // String, VarRef (the name)
  std::vector<DialectValue> list_items;     // List
  std::shared_ptr<DialectCall> call;        // Call
};

struct DialectArg {
  std::string keyword;  // empty for positional
  DialectValue value;
};

struct DialectCall {
  std::string class_name;
  std::vector<DialectArg> args;
};

struct DialectStatement {
  enum class Kind { Assignment, BareCall, Import, ClassDef };
  Kind kind;
  int line = 0;
  std::string var_name;              // Assignment
  std::shared_ptr<DialectCall> call; // Assignment, BareCall
  std::string import_base;           // Import
  std::vector<std::string> import_names;
  std::string class_name;            // ClassDef
  std::string base_name;
};

struct DialectAst {
  std::vector<DialectStatement> statements;
};

struct ParseDiagnostics {
  std::vector<std::pair<int, std::string>> skipped_lines;
  std::vector<std::pair<int, std::string>> bind_errors;

  bool clean() const { return skipped_lines.empty() && bind_errors.empty(); }
};

// Strips prose around fenced code blocks. Multiple fences are
// concatenated in order; responses without fences pass through.
std::string extract_code_region(const std::string& response);

// Line-oriented recovery parse: malformed statements are skipped and
// recorded, never fatal. Calls may span lines (bracket balancing).
std::pair<DialectAst, ParseDiagnostics> parse_program(const std::string& code);

// Resolves parsed calls against the schema into typed extractions.
// Unknown classes/roles become bind diagnostics. Families outside the
// task subset are dropped with a diagnostic. Set semantics: duplicate
// identical extractions count once.
std::pair<ExtractionSet, ParseDiagnostics> bind(const DialectAst& ast,
                                                const Schema& schema,
                                                Task task);

// Recovers type names from a stage-1 import completion. Accepts a full
// import statement or a bare comma-separated suffix; drops names that
// do not resolve in the schema, deduplicates preserving order.
std::pair<std::vector<std::string>, ParseDiagnostics> parse_import_completion(
    const std::string& response, const Schema& schema);

// String escaping shared with the renderer.
std::string quote_dialect_string(const std::string& s);

}  // namespace ciex
