#pragma once

#include <stdexcept>
#include <string>

namespace textattr {

// Base type for everything thrown on purpose by this library, so callers can
// distinguish our diagnostics from stdlib failures.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user-supplied configuration (flags, config files, out-of-range knobs).
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

// Input data that violates the expected schema (missing fields, bad labels,
// unreadable records). Messages name the offending record where possible.
struct SchemaError : Error {
  explicit SchemaError(const std::string& msg) : Error("input: " + msg) {}
};

// Numerical failure inside a solver (singular systems, divergence).
struct NumericalError : Error {
  explicit NumericalError(const std::string& msg) : Error("numeric: " + msg) {}
};

// Filesystem-level trouble: missing paths, write failures.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io: " + msg) {}
};

}  // namespace textattr
