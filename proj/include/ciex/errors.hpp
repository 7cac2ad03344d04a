#pragma once

#include <stdexcept>
#include <string>

namespace ciex {

// Malformed input file (bad JSON, missing keys).
class FormatError : public std::runtime_error {
public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Well-formed input that violates a domain invariant.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad run configuration (incompatible mode/task, incomplete strategy).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Prompt does not fit the token budget even with zero examples.
class OverlengthError : public std::runtime_error {
public:
  explicit OverlengthError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure from an external provider (embedder, annotator, LLM).
class ProviderError : public std::runtime_error {
public:
  ProviderError(const std::string& msg, bool retryable)
      : std::runtime_error(msg), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

private:
  bool retryable_;
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ciex
