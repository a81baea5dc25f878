#pragma once

#include <stdexcept>
#include <string>

namespace obsnet {

// Shape or dimension disagreement between tensors.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& m) : std::runtime_error(m) {}
};

// NaN/Inf encountered, or a numeric precondition violated.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& m) : std::runtime_error(m) {}
};

// API misuse: a caller broke an operation contract.
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& m) : std::runtime_error(m) {}
};

// Problems in user-supplied data (empty corpus, bad label, ...).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& m) : std::runtime_error(m) {}
};

// Malformed file contents (CSV header, JSONL line, checkpoint magic).
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& m) : std::runtime_error(m) {}
};

// Invalid configuration / flag combination. Maps to exit code 2 in the CLI.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

// A training/evaluation protocol rule was violated (signals a harness bug).
struct ProtocolError : std::runtime_error {
  explicit ProtocolError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace obsnet
