#pragma once

#include <stdexcept>
#include <string>

namespace lgre {

enum class ErrorKind {
  usage,       // bad command line or unknown config key
  config,      // invalid configuration value
  io,          // missing or unreadable file
  parse,       // malformed input file
  dimension,   // tensor shape mismatch
  integrity,   // broken internal contract (bad index, corrupt checkpoint)
  divergence,  // non-finite loss during training
  generation,  // synthetic dataset could not be generated
};

const char* to_string(ErrorKind kind);

/// Base exception for every error raised by the library. The kind decides the
/// process exit code used by the command-line tool.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& m) : Error(ErrorKind::usage, m) {}
};
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error(ErrorKind::config, m) {}
};
class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::io, m) {}
};
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& m) : Error(ErrorKind::parse, m) {}
};
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& m) : Error(ErrorKind::dimension, m) {}
};
class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& m) : Error(ErrorKind::integrity, m) {}
};
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& m) : Error(ErrorKind::divergence, m) {}
};
class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& m) : Error(ErrorKind::generation, m) {}
};

/// Process exit code for an error kind. 0 is reserved for success.
int exit_code(ErrorKind kind);

}  // namespace lgre
