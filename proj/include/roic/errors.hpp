#pragma once

#include <stdexcept>
#include <string>

namespace roic {

// Error categories map onto CLI exit codes: config = 2, I/O = 3,
// numerical failure = 4, checkpoint schema mismatch = 5.

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input data (bad JSONL line, unknown label, bad lexicon row).
struct ParseError : IoError {
  explicit ParseError(const std::string& what) : IoError(what) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace roic
